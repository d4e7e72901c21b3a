#include "prodmat/harness.hpp"

#include <json.hpp>

#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "prodmat/ensembles.hpp"
#include "prodmat/mvbessel.hpp"
#include "prodmat/rng.hpp"
#include "prodmat/stats.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace prodmat {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------- sha1

struct Sha1 {
    std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
    std::uint64_t total = 0;
    unsigned char buf[64];
    std::size_t fill = 0;

    static std::uint32_t rol(std::uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }

    void block(const unsigned char* p) {
        std::uint32_t w[80];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int i = 0; i < 80; ++i) {
            std::uint32_t f, k;
            if (i < 20) {
                f = (b & c) | ((~b) & d);
                k = 0x5A827999u;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            std::uint32_t t = rol(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rol(b, 30);
            b = a;
            a = t;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }

    void update(const unsigned char* p, std::size_t len) {
        total += len;
        while (len > 0) {
            std::size_t take = std::min(len, 64 - fill);
            std::memcpy(buf + fill, p, take);
            fill += take;
            p += take;
            len -= take;
            if (fill == 64) {
                block(buf);
                fill = 0;
            }
        }
    }

    std::string hex() {
        std::uint64_t bits = total * 8;
        unsigned char pad = 0x80;
        update(&pad, 1);
        unsigned char zero = 0;
        while (fill != 56) update(&zero, 1);
        unsigned char lenb[8];
        for (int i = 0; i < 8; ++i) lenb[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
        update(lenb, 8);
        char out[41];
        for (int i = 0; i < 5; ++i) std::snprintf(out + 8 * i, 9, "%08x", h[i]);
        return std::string(out, 40);
    }
};

// ---------------------------------------------------------------- config

EnsembleSpec parse_ensemble(const json& j) {
    EnsembleSpec spec;
    std::string kind = j.value("kind", "");
    if (kind == "fixed_spectrum") {
        spec.kind = EnsembleSpec::Kind::FixedSpectrum;
        if (!j.contains("atoms") || !j["atoms"].is_array() || j["atoms"].empty())
            throw ConfigError("ensemble: fixed_spectrum needs a nonempty atoms array");
        for (const auto& a : j["atoms"]) {
            double v = a.get<double>();
            if (!(v > 0.0)) throw ConfigError("ensemble: atoms must be positive");
            spec.atoms.push_back(v);
        }
    } else if (kind == "ginibre_polar" || kind == "truncated_unitary") {
        spec.kind = (kind == "ginibre_polar") ? EnsembleSpec::Kind::GinibrePolar
                                              : EnsembleSpec::Kind::TruncatedUnitary;
        spec.ratio = j.value("ratio", 2.0);
        if (!(spec.ratio > 1.0))
            throw ConfigError("ensemble: dimension ratio must exceed 1 (separation hypothesis)");
    } else {
        throw ConfigError("ensemble: unknown kind '" + kind + "'");
    }
    return spec;
}

json ensemble_to_json(const EnsembleSpec& spec) {
    json j;
    switch (spec.kind) {
        case EnsembleSpec::Kind::FixedSpectrum:
            j["kind"] = "fixed_spectrum";
            j["atoms"] = spec.atoms;
            break;
        case EnsembleSpec::Kind::GinibrePolar:
            j["kind"] = "ginibre_polar";
            j["ratio"] = spec.ratio;
            break;
        case EnsembleSpec::Kind::TruncatedUnitary:
            j["kind"] = "truncated_unitary";
            j["ratio"] = spec.ratio;
            break;
    }
    return j;
}

std::vector<double> atoms_for_n(const EnsembleSpec& spec, int n) {
    if (spec.kind != EnsembleSpec::Kind::FixedSpectrum)
        throw ConfigError("ensemble: spectrum atoms requested from a random ensemble");
    if (n % static_cast<int>(spec.atoms.size()) != 0)
        throw ConfigError("ensemble: N must be a multiple of the atom count (uniform weights)");
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = spec.atoms[i % spec.atoms.size()];
    return out;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.n < 1) throw ConfigError("config: n must be >= 1");
    if (cfg.m < 1) throw ConfigError("config: m must be >= 1");
    if (cfg.replicas < 100) throw ConfigError("config: z-scores need at least 100 replicas");
    for (double c : cfg.c_grid)
        if (!(c > 0.0 && c < 1.0))
            throw ConfigError("config: c_grid entries must lie in (0, 1)");
    for (const auto& q : cfg.joint_queries) {
        if (q.c.empty() || q.c.size() != q.m.size())
            throw ConfigError("config: joint query needs matching c and m lists");
        double csum = 0.0;
        for (double c : q.c) {
            if (!(c > 0.0)) throw ConfigError("config: joint query c must be > 0");
            csum += c;
        }
        if (!(csum < 1.0)) throw ConfigError("config: joint query sum of c must stay below 1");
        for (std::size_t i = 0; i < q.m.size(); ++i) {
            if (q.m[i] < 1 || q.m[i] > cfg.m) throw ConfigError("config: joint query m out of range");
            if (i > 0 && q.m[i] > q.m[i - 1])
                throw ConfigError("config: joint query m must be nonincreasing");
        }
    }
    auto check_atoms = [&](const EnsembleSpec& spec) {
        if (spec.kind != EnsembleSpec::Kind::FixedSpectrum) return;
        (void)atoms_for_n(spec, cfg.n);
        if (cfg.containment_c > 0.0) {
            if (cfg.containment_c < 1.0) throw ConfigError("config: containment C must be >= 1");
            for (double a : spec.atoms)
                if (a < 1.0 / cfg.containment_c || a > cfg.containment_c)
                    throw ConfigError("config: atoms violate the declared containment [1/C, C]");
        }
    };
    check_atoms(cfg.ensemble);
    if (cfg.ensemble_b) check_atoms(*cfg.ensemble_b);
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        if (!j.contains("ensemble")) throw ConfigError("config: missing ensemble");
        cfg.ensemble = parse_ensemble(j["ensemble"]);
        if (j.contains("ensemble_b")) cfg.ensemble_b = parse_ensemble(j["ensemble_b"]);
        cfg.n = j.value("n", 0);
        cfg.m = j.value("m", 0);
        if (j.contains("c_grid")) cfg.c_grid = j["c_grid"].get<std::vector<double>>();
        if (j.contains("joint_queries")) {
            for (const auto& q : j["joint_queries"]) {
                JointQuery jq;
                jq.c = q.at("c").get<std::vector<double>>();
                jq.m = q.at("m").get<std::vector<int>>();
                cfg.joint_queries.push_back(std::move(jq));
            }
        }
        cfg.replicas = j.value("replicas", 0);
        cfg.seed = j.value("seed", std::uint64_t{1});
        cfg.containment_c = j.value("containment_c", 0.0);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

std::string config_canonical_json(const ExperimentConfig& cfg) {
    json j;
    j["ensemble"] = ensemble_to_json(cfg.ensemble);
    if (cfg.ensemble_b) j["ensemble_b"] = ensemble_to_json(*cfg.ensemble_b);
    j["n"] = cfg.n;
    j["m"] = cfg.m;
    j["c_grid"] = cfg.c_grid;
    json jq = json::array();
    for (const auto& q : cfg.joint_queries) jq.push_back({{"c", q.c}, {"m", q.m}});
    j["joint_queries"] = jq;
    j["replicas"] = cfg.replicas;
    j["seed"] = cfg.seed;
    j["containment_c"] = cfg.containment_c;
    return j.dump();
}

std::string sha1_hex(const std::string& data) {
    Sha1 s;
    s.update(reinterpret_cast<const unsigned char*>(data.data()), data.size());
    return s.hex();
}

namespace {

// ------------------------------------------------------- replica sampling

struct ReplicaTrace {
    // snapshot log squared singular values per checkpoint
    std::vector<std::vector<double>> snapshots;
    // realized centering prefix values per checkpoint
    std::vector<double> e_hat;
    std::vector<double> v_hat;
};

ReplicaTrace run_replica(const EnsembleSpec& spec, int n, const std::vector<int>& checkpoints,
                         RngStream& rng) {
    ReplicaTrace out;
    out.snapshots.reserve(checkpoints.size());
    ProductAccumulator acc(n, false);
    const int m_max = checkpoints.back();
    double e_run = 0.0, v_run = 0.0;
    std::size_t next = 0;

    std::vector<double> atoms;
    Eigen::VectorXd droot;
    double e_step = 0.0, v_step = 0.0;
    if (spec.kind == EnsembleSpec::Kind::FixedSpectrum) {
        atoms = atoms_for_n(spec, n);
        droot.resize(n);
        for (int i = 0; i < n; ++i) droot(i) = std::sqrt(atoms[i]);
        Cumulants cu = cumulants(EmpiricalMeasure::uniform(atoms));
        e_step = std::log(cu.kappa1);
        v_step = cu.kappa2 / (cu.kappa1 * cu.kappa1) / n;
    }

    for (int m = 1; m <= m_max; ++m) {
        switch (spec.kind) {
            case EnsembleSpec::Kind::FixedSpectrum: {
                // right-invariance lets the sampler drop the right Haar factor
                Matrix x = haar_unitary(n, rng) * droot.asDiagonal();
                acc.accumulate_nonsingular(x);
                e_run += e_step;
                v_run += v_step;
                break;
            }
            case EnsembleSpec::Kind::GinibrePolar: {
                int rows = static_cast<int>(std::ceil(spec.ratio * n));
                Matrix g = ginibre(rows, n, rng);
                Eigen::BDCSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
                Matrix x = svd.matrixV() *
                           svd.singularValues().cast<std::complex<double>>().asDiagonal() *
                           svd.matrixV().adjoint();
                acc.accumulate_nonsingular(x);
                double k1 = 0.0, k2 = 0.0;
                for (int i = 0; i < n; ++i) {
                    double y = svd.singularValues()(i) * svd.singularValues()(i);
                    k1 += y;
                    k2 += y * y;
                }
                k1 /= n;
                k2 = k2 / n - k1 * k1;
                e_run += std::log(k1);
                v_run += k2 / (k1 * k1) / n;
                break;
            }
            case EnsembleSpec::Kind::TruncatedUnitary: {
                int ambient = static_cast<int>(std::ceil(spec.ratio * n));
                Matrix x = truncated_unitary(n, ambient, rng);
                Eigen::BDCSVD<Matrix> svd(x);
                acc.accumulate_nonsingular(x);
                double k1 = 0.0, k2 = 0.0;
                for (int i = 0; i < n; ++i) {
                    double y = svd.singularValues()(i) * svd.singularValues()(i);
                    k1 += y;
                    k2 += y * y;
                }
                k1 /= n;
                k2 = k2 / n - k1 * k1;
                e_run += std::log(k1);
                v_run += k2 / (k1 * k1) / n;
                break;
            }
        }
        if (next < checkpoints.size() && checkpoints[next] == m) {
            out.snapshots.push_back(acc.log_sq_singular_values().values);
            out.e_hat.push_back(e_run);
            out.v_hat.push_back(v_run);
            ++next;
        }
    }
    return out;
}

struct EnsembleRun {
    // per query, per replica observable values
    std::vector<std::vector<double>> qvals;
    // per checkpoint: mean realized variance time
    std::vector<double> gamma_hat;
    // per replica centered top value at the last checkpoint
    std::vector<double> tops;
};

EnsembleRun run_ensemble(const EnsembleSpec& spec, const ExperimentConfig& cfg,
                         const std::vector<JointQuery>& queries,
                         const std::vector<int>& checkpoints, std::uint64_t stream_base,
                         bool parallel) {
    const int n = cfg.n;
    const int reps = cfg.replicas;
    EnsembleRun out;
    out.qvals.assign(queries.size(), std::vector<double>(reps, 0.0));
    out.tops.assign(reps, 0.0);
    std::vector<std::vector<double>> vhat(checkpoints.size(), std::vector<double>(reps, 0.0));
    const double log_n = std::log(static_cast<double>(n));

    auto body = [&](int r) {
        RngStream rng(cfg.seed, stream_base + static_cast<std::uint64_t>(r));
        ReplicaTrace tr = run_replica(spec, n, checkpoints, rng);
        for (std::size_t q = 0; q < queries.size(); ++q) {
            double prod = 1.0;
            for (std::size_t i = 0; i < queries[q].c.size(); ++i) {
                auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(),
                                           queries[q].m[i]);
                std::size_t ci = static_cast<std::size_t>(it - checkpoints.begin());
                const auto& vals = tr.snapshots[ci];
                double center = tr.e_hat[ci] + log_n;
                double s = 0.0;
                for (double v : vals) s += std::exp(queries[q].c[i] * (v - center));
                prod *= s;
            }
            out.qvals[q][r] = prod;
        }
        std::size_t last = checkpoints.size() - 1;
        out.tops[r] = tr.snapshots[last][0] - tr.e_hat[last] - log_n;
        for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) vhat[ci][r] = tr.v_hat[ci];
    };

    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (int r = 0; r < reps; ++r) body(r);
    } else {
        for (int r = 0; r < reps; ++r) body(r);
    }

    out.gamma_hat.resize(checkpoints.size());
    for (std::size_t ci = 0; ci < checkpoints.size(); ++ci)
        out.gamma_hat[ci] = pairwise_sum(vhat[ci]) / reps;
    return out;
}

}  // namespace

ExperimentReport run_universality(const ExperimentConfig& cfg, bool parallel) {
    validate_config(cfg);
    ExperimentReport rep;
    rep.kind = "universality";
    rep.config_hash = sha1_hex(config_canonical_json(cfg));
    rep.replicas = cfg.replicas;
    rep.n = cfg.n;

    std::vector<JointQuery> queries;
    for (double c : cfg.c_grid) queries.push_back({{c}, {cfg.m}});
    for (const auto& q : cfg.joint_queries) queries.push_back(q);
    if (queries.empty()) throw ConfigError("config: universality needs at least one query");

    std::set<int> cps;
    cps.insert(cfg.m);
    for (const auto& q : queries)
        for (int m : q.m) cps.insert(m);
    std::vector<int> checkpoints(cps.begin(), cps.end());

    EnsembleRun a = run_ensemble(cfg.ensemble, cfg, queries, checkpoints, 0, parallel);

    // exact centering for deterministic spectra, averaged realized otherwise
    std::vector<double> gamma(checkpoints.size());
    if (cfg.ensemble.kind == EnsembleSpec::Kind::FixedSpectrum) {
        auto mu = EmpiricalMeasure::uniform(atoms_for_n(cfg.ensemble, cfg.n));
        std::vector<EmpiricalMeasure> facs(cfg.m, mu);
        CenteringProfile prof = centering(facs, cfg.n);
        for (std::size_t ci = 0; ci < checkpoints.size(); ++ci)
            gamma[ci] = prof.v_n[checkpoints[ci]];
    } else {
        gamma = a.gamma_hat;
    }

    for (std::size_t q = 0; q < queries.size(); ++q) {
        QueryResult res;
        res.c = queries[q].c;
        res.m = queries[q].m;
        double csum = 0.0;
        LaplaceQuery lq;
        for (std::size_t i = 0; i < queries[q].c.size(); ++i) {
            auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(), queries[q].m[i]);
            std::size_t ci = static_cast<std::size_t>(it - checkpoints.begin());
            res.gamma_hat.push_back(gamma[ci]);
            lq.t.push_back(gamma[ci]);
            lq.c.push_back(queries[q].c[i]);
            csum += queries[q].c[i];
        }
        auto st = mc_stats(a.qvals[q]);
        res.estimate = st.mean;
        res.stderr_ = st.stderr_;
        if (*std::min_element(res.gamma_hat.begin(), res.gamma_hat.end()) <= 1e-9) {
            // degenerate spectra: the observable is deterministic
            res.gamma_zero = true;
            res.formula =
                std::pow(static_cast<double>(cfg.n), 1.0 * queries[q].c.size() - csum);
            // the observable is deterministic: stderr is pure roundoff
            res.z = (std::abs(res.estimate - res.formula) <=
                             1e-9 * std::max(1.0, std::abs(res.formula))
                         ? 0.0
                         : std::numeric_limits<double>::infinity());
        } else {
            res.formula = laplace_limit(lq);
            res.z = (res.estimate - res.formula) / res.stderr_;
        }
        if (!(std::abs(res.z) <= 4.0)) rep.pass = false;
        rep.queries.push_back(std::move(res));
    }
    rep.top_samples_a = a.tops;

    if (cfg.ensemble_b) {
        EnsembleRun b = run_ensemble(*cfg.ensemble_b, cfg, queries, checkpoints,
                                     static_cast<std::uint64_t>(cfg.replicas), parallel);
        rep.top_samples_b = b.tops;
        KsResult ks = ks_two_sample(a.tops, b.tops);
        rep.statistics.push_back({"ks_top_cross_ensemble", ks.statistic, ks.p_value});
        if (!(ks.p_value > 0.01)) rep.pass = false;
    }
    return rep;
}

ExperimentReport run_oracle_smalln(const ExperimentConfig& cfg, bool parallel) {
    validate_config(cfg);
    if (cfg.ensemble.kind != EnsembleSpec::Kind::FixedSpectrum)
        throw ConfigError("oracle-smalln: needs a fixed_spectrum ensemble");
    if (cfg.n > 3) throw ConfigError("oracle-smalln: N must be <= 3");

    ExperimentReport rep;
    rep.kind = "oracle-smalln";
    rep.config_hash = sha1_hex(config_canonical_json(cfg));
    rep.replicas = cfg.replicas;
    rep.n = cfg.n;

    std::vector<JointQuery> queries;
    for (double c : cfg.c_grid) queries.push_back({{c}, {cfg.m}});
    for (const auto& q : cfg.joint_queries) queries.push_back(q);
    if (queries.empty()) throw ConfigError("config: oracle-smalln needs at least one query");
    for (const auto& q : queries)
        if (static_cast<int>(q.c.size()) > 2) throw ConfigError("oracle-smalln: k must be <= 2");

    std::set<int> cps;
    for (const auto& q : queries)
        for (int m : q.m) cps.insert(m);
    std::vector<int> checkpoints(cps.begin(), cps.end());

    std::vector<double> atoms = atoms_for_n(cfg.ensemble, cfg.n);
    auto mu = EmpiricalMeasure::uniform(atoms);
    std::vector<EmpiricalMeasure> spectra(cfg.m, mu);

    // Monte Carlo over full U D V^H factors (uncentered observable)
    std::vector<std::vector<double>> qvals(queries.size(), std::vector<double>(cfg.replicas));
    auto body = [&](int r) {
        RngStream rng(cfg.seed, r);
        ProductAccumulator acc(cfg.n, false);
        std::vector<std::vector<double>> snaps;
        std::size_t next = 0;
        for (int m = 1; m <= checkpoints.back(); ++m) {
            acc.accumulate_nonsingular(fixed_spectrum(atoms, rng));
            if (next < checkpoints.size() && checkpoints[next] == m) {
                snaps.push_back(acc.log_sq_singular_values().values);
                ++next;
            }
        }
        for (std::size_t q = 0; q < queries.size(); ++q) {
            double prod = 1.0;
            for (std::size_t i = 0; i < queries[q].c.size(); ++i) {
                auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(),
                                           queries[q].m[i]);
                const auto& vals = snaps[static_cast<std::size_t>(it - checkpoints.begin())];
                double s = 0.0;
                for (double v : vals) s += std::exp(queries[q].c[i] * v);
                prod *= s;
            }
            qvals[q][r] = prod;
        }
    };
    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (int r = 0; r < cfg.replicas; ++r) body(r);
    } else {
        for (int r = 0; r < cfg.replicas; ++r) body(r);
    }

    for (std::size_t q = 0; q < queries.size(); ++q) {
        QueryResult res;
        res.c = queries[q].c;
        res.m = queries[q].m;
        res.formula = observable_deterministic(spectra, queries[q].m, queries[q].c, cfg.n);
        auto st = mc_stats(qvals[q]);
        res.estimate = st.mean;
        res.stderr_ = st.stderr_;
        res.z = (res.estimate - res.formula) / res.stderr_;
        if (!(std::abs(res.z) <= 4.0)) rep.pass = false;
        rep.queries.push_back(std::move(res));
    }
    return rep;
}

std::vector<ConvergenceRow> run_convergence_sweep(double c, double t, const std::vector<int>& ns) {
    if (ns.empty()) throw ConfigError("convergence: need at least one N");
    std::vector<ConvergenceRow> rows;
    double lim = laplace_limit({{t}, {c}});
    double prev = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        ConvergenceRow row;
        row.n = ns[i];
        row.finite_n = laplace_finite_n({{t}, {c}}, ns[i]);
        row.limit = lim;
        row.err = std::abs(row.finite_n - lim);
        row.exact = row.err < 1e-10;
        row.ratio = (i > 0 && prev > 0.0) ? row.err / prev : 0.0;
        prev = row.err;
        rows.push_back(row);
    }
    return rows;
}

SamplePaths run_sample_paths(int n, double t_max, int steps, std::uint64_t seed, double sim_step) {
    if (n < 1 || n > 200) throw ConfigError("sample-paths: n must be in 1..200");
    if (steps < 100) throw ConfigError("sample-paths: steps must be >= 100");
    if (!(t_max > 0.0)) throw ConfigError("sample-paths: t_max must be > 0");

    SamplePaths out;
    out.n = n;
    std::vector<double> raw(steps);
    out.times.resize(steps);
    for (int i = 0; i < steps; ++i) {
        out.times[i] = t_max * (i + 1) / steps;
        raw[i] = out.times[i] / 4.0;  // xi^{(N)}(t/4) convention
    }
    if (sim_step <= 0.0) sim_step = raw[0] / 10.0;
    RngStream rng(seed, 0);
    auto path = gl_brownian_path(n, raw, sim_step, rng);

    const double log_n = std::log(static_cast<double>(n));
    out.values.resize(steps);
    for (int i = 0; i < steps; ++i) {
        out.values[i] = path[i].values;
        for (double& v : out.values[i]) v -= 0.5 * n * out.times[i] + log_n;
    }
    return out;
}

// ---------------------------------------------------------------- output

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json query_to_json(const QueryResult& q) {
    json j;
    j["c"] = q.c;
    j["m"] = q.m;
    if (!q.gamma_hat.empty()) j["gamma_hat"] = q.gamma_hat;
    j["formula"] = q.formula;
    j["estimate"] = q.estimate;
    j["stderr"] = q.stderr_;
    j["z"] = q.z;
    if (q.gamma_zero) j["gamma_zero"] = true;
    return j;
}

}  // namespace

void write_report_json(const ExperimentReport& rep, const ExperimentConfig& cfg,
                       const std::string& path) {
    json j;
    j["config_hash"] = rep.config_hash;
    j["config"] = json::parse(config_canonical_json(cfg));
    j["kind"] = rep.kind;
    json queries = json::array();
    for (const auto& q : rep.queries) queries.push_back(query_to_json(q));
    j["queries"] = queries;
    json stats = json::array();
    for (const auto& s : rep.statistics)
        stats.push_back({{"name", s.name}, {"statistic", s.statistic}, {"p_value", s.p_value}});
    j["statistics"] = stats;
    j["runtime"] = {{"replicas", rep.replicas}, {"n", rep.n}, {"pass", rep.pass}};
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_report_json: cannot open " + path);
    f << j.dump(2) << "\n";
}

void write_samples_csv(const ExperimentReport& rep, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_samples_csv: cannot open " + path);
    f << "ensemble,replica,top_value\r\n";
    for (std::size_t r = 0; r < rep.top_samples_a.size(); ++r)
        f << "a," << r << "," << fmt_double(rep.top_samples_a[r]) << "\r\n";
    for (std::size_t r = 0; r < rep.top_samples_b.size(); ++r)
        f << "b," << r << "," << fmt_double(rep.top_samples_b[r]) << "\r\n";
}

void write_sample_paths_csv(const SamplePaths& paths, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_sample_paths_csv: cannot open " + path);
    f << "replica,time,j,value\r\n";
    for (std::size_t i = 0; i < paths.times.size(); ++i)
        for (int jdx = 0; jdx < paths.n; ++jdx)
            f << "0," << fmt_double(paths.times[i]) << "," << (jdx + 1) << ","
              << fmt_double(paths.values[i][jdx]) << "\r\n";
}

void write_convergence_csv(const std::vector<ConvergenceRow>& rows, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_convergence_csv: cannot open " + path);
    f << "n,finite_n,limit,err,ratio,order\r\n";
    for (const auto& r : rows) {
        f << r.n << "," << fmt_double(r.finite_n) << "," << fmt_double(r.limit) << ","
          << fmt_double(r.err) << "," << fmt_double(r.ratio) << ",";
        if (r.exact)
            f << "exact";
        else if (r.ratio > 0.0)
            f << fmt_double(std::log2(1.0 / r.ratio));
        f << "\r\n";
    }
}

void write_meta_json(double wall_seconds, int workers, const std::string& path) {
    json j;
    j["wall_seconds"] = wall_seconds;
    j["workers"] = workers;
    auto now = std::chrono::system_clock::now().time_since_epoch();
    j["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now).count() / 1000.0;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_meta_json: cannot open " + path);
    f << j.dump(2) << "\n";
}

}  // namespace prodmat
