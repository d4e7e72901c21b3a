#pragma once

#include <mpfr.h>

#include <complex>
#include <utility>

namespace prodmat::detail {

// Minimal arbitrary-precision complex value for the confluent determinant
// path. Precision is a thread-local setting taken at construction.
class MpComplex {
  public:
    static mpfr_prec_t& precision() {
        thread_local mpfr_prec_t bits = 256;
        return bits;
    }

    MpComplex() {
        mpfr_init2(re_, precision());
        mpfr_init2(im_, precision());
        mpfr_set_zero(re_, 1);
        mpfr_set_zero(im_, 1);
    }
    MpComplex(long double re, long double im = 0.0L) : MpComplex() {
        mpfr_set_ld(re_, re, MPFR_RNDN);
        mpfr_set_ld(im_, im, MPFR_RNDN);
    }
    MpComplex(const MpComplex& o) : MpComplex() {
        mpfr_set(re_, o.re_, MPFR_RNDN);
        mpfr_set(im_, o.im_, MPFR_RNDN);
    }
    MpComplex(MpComplex&& o) noexcept {
        mpfr_init2(re_, mpfr_get_prec(o.re_));
        mpfr_init2(im_, mpfr_get_prec(o.im_));
        mpfr_swap(re_, o.re_);
        mpfr_swap(im_, o.im_);
    }
    MpComplex& operator=(const MpComplex& o) {
        if (this != &o) {
            mpfr_set(re_, o.re_, MPFR_RNDN);
            mpfr_set(im_, o.im_, MPFR_RNDN);
        }
        return *this;
    }
    MpComplex& operator=(MpComplex&& o) noexcept {
        mpfr_swap(re_, o.re_);
        mpfr_swap(im_, o.im_);
        return *this;
    }
    ~MpComplex() {
        mpfr_clear(re_);
        mpfr_clear(im_);
    }

    static MpComplex log_real(double x) {  // log of a positive real
        MpComplex out;
        mpfr_set_d(out.re_, x, MPFR_RNDN);
        mpfr_log(out.re_, out.re_, MPFR_RNDN);
        return out;
    }

    MpComplex& operator+=(const MpComplex& o) {
        mpfr_add(re_, re_, o.re_, MPFR_RNDN);
        mpfr_add(im_, im_, o.im_, MPFR_RNDN);
        return *this;
    }
    MpComplex& operator-=(const MpComplex& o) {
        mpfr_sub(re_, re_, o.re_, MPFR_RNDN);
        mpfr_sub(im_, im_, o.im_, MPFR_RNDN);
        return *this;
    }
    friend MpComplex operator+(MpComplex a, const MpComplex& b) { return a += b; }
    friend MpComplex operator-(MpComplex a, const MpComplex& b) { return a -= b; }
    friend MpComplex operator*(const MpComplex& a, const MpComplex& b) {
        MpComplex out;
        mpfr_t t;
        mpfr_init2(t, precision());
        mpfr_mul(out.re_, a.re_, b.re_, MPFR_RNDN);
        mpfr_mul(t, a.im_, b.im_, MPFR_RNDN);
        mpfr_sub(out.re_, out.re_, t, MPFR_RNDN);
        mpfr_mul(out.im_, a.re_, b.im_, MPFR_RNDN);
        mpfr_mul(t, a.im_, b.re_, MPFR_RNDN);
        mpfr_add(out.im_, out.im_, t, MPFR_RNDN);
        mpfr_clear(t);
        return out;
    }
    MpComplex& operator*=(const MpComplex& o) { return *this = *this * o; }
    friend MpComplex operator/(const MpComplex& a, const MpComplex& b) {
        MpComplex out;
        mpfr_t den, t;
        mpfr_init2(den, precision());
        mpfr_init2(t, precision());
        mpfr_mul(den, b.re_, b.re_, MPFR_RNDN);
        mpfr_mul(t, b.im_, b.im_, MPFR_RNDN);
        mpfr_add(den, den, t, MPFR_RNDN);
        mpfr_mul(out.re_, a.re_, b.re_, MPFR_RNDN);
        mpfr_mul(t, a.im_, b.im_, MPFR_RNDN);
        mpfr_add(out.re_, out.re_, t, MPFR_RNDN);
        mpfr_div(out.re_, out.re_, den, MPFR_RNDN);
        mpfr_mul(out.im_, a.im_, b.re_, MPFR_RNDN);
        mpfr_mul(t, a.re_, b.im_, MPFR_RNDN);
        mpfr_sub(out.im_, out.im_, t, MPFR_RNDN);
        mpfr_div(out.im_, out.im_, den, MPFR_RNDN);
        mpfr_clear(den);
        mpfr_clear(t);
        return out;
    }
    MpComplex& operator/=(const MpComplex& o) { return *this = *this / o; }

    // exp(this), complex
    MpComplex exp() const {
        MpComplex out;
        mpfr_t er, s, c;
        mpfr_init2(er, precision());
        mpfr_init2(s, precision());
        mpfr_init2(c, precision());
        mpfr_exp(er, re_, MPFR_RNDN);
        mpfr_sin_cos(s, c, im_, MPFR_RNDN);
        mpfr_mul(out.re_, er, c, MPFR_RNDN);
        mpfr_mul(out.im_, er, s, MPFR_RNDN);
        mpfr_clear(er);
        mpfr_clear(s);
        mpfr_clear(c);
        return out;
    }

    bool is_zero() const { return mpfr_zero_p(re_) && mpfr_zero_p(im_); }

    // |this|^2 comparison without conversion loss
    static int cmp_abs2(const MpComplex& a, const MpComplex& b) {
        mpfr_t aa, bb, t;
        mpfr_init2(aa, precision());
        mpfr_init2(bb, precision());
        mpfr_init2(t, precision());
        mpfr_mul(aa, a.re_, a.re_, MPFR_RNDN);
        mpfr_mul(t, a.im_, a.im_, MPFR_RNDN);
        mpfr_add(aa, aa, t, MPFR_RNDN);
        mpfr_mul(bb, b.re_, b.re_, MPFR_RNDN);
        mpfr_mul(t, b.im_, b.im_, MPFR_RNDN);
        mpfr_add(bb, bb, t, MPFR_RNDN);
        int c = mpfr_cmp(aa, bb);
        mpfr_clear(aa);
        mpfr_clear(bb);
        mpfr_clear(t);
        return c;
    }

    long double log_abs() const {
        mpfr_t h;
        mpfr_init2(h, precision());
        mpfr_hypot(h, re_, im_, MPFR_RNDN);
        mpfr_log(h, h, MPFR_RNDN);
        long double out = mpfr_get_ld(h, MPFR_RNDN);
        mpfr_clear(h);
        return out;
    }

    long double arg_ld() const {
        mpfr_t a;
        mpfr_init2(a, precision());
        mpfr_atan2(a, im_, re_, MPFR_RNDN);
        long double out = mpfr_get_ld(a, MPFR_RNDN);
        mpfr_clear(a);
        return out;
    }

  private:
    mpfr_t re_, im_;
};

}  // namespace prodmat::detail
