#include "huberboot/simulate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "huberboot/errors.hpp"
#include "huberboot/parallel.hpp"
#include "huberboot/rng.hpp"

namespace huberboot {

namespace {

// Fixed stream for the deterministic moment certification. The value is
// arbitrary but pinned: it keeps the sample-variance margin stable even for
// the heaviest lognormal tails, while any systematic standardization bug
// still shifts the measured moments far outside the bands.
constexpr std::uint64_t kCertStream = 21;

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct Moments {
    double mean;
    double var;
};

Moments weibull_moments(double shape, double scale) {
    double g1 = std::tgamma(1.0 + 1.0 / shape);
    double g2 = std::tgamma(1.0 + 2.0 / shape);
    return {scale * g1, scale * scale * (g2 - g1 * g1)};
}

Moments lognormal_moments(double sigma) {
    double w = std::exp(sigma * sigma);
    return {std::exp(0.5 * sigma * sigma), (w - 1.0) * w};
}

}  // namespace

std::string noise_name(const NoiseModel& model) {
    switch (model.kind) {
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::StudentT: return "t" + fmt_short(model.param);
        case NoiseKind::GammaSkew: return "gamma";
        case NoiseKind::WeibullMix: return "wbl-mix";
        case NoiseKind::ParetoMix: return "par-mix";
        case NoiseKind::LognormalMix: return "logn-mix";
        case NoiseKind::Lognormal: return "logn" + fmt_short(model.param);
    }
    return "unknown";
}

NoiseModel parse_noise(const std::string& name) {
    auto tail_number = [&](std::size_t prefix_len, double fallback) {
        std::string tail = name.substr(prefix_len);
        if (tail.empty()) return fallback;
        if (tail.front() == ':') tail.erase(0, 1);
        std::size_t used = 0;
        double v = std::stod(tail, &used);
        if (used != tail.size())
            throw std::invalid_argument("unrecognized noise model: " + name);
        return v;
    };
    if (name == "gaussian" || name == "normal") return NoiseModel::gaussian();
    if (name == "gamma") return NoiseModel::gamma_skew();
    if (name == "wbl-mix" || name == "wblmix") return NoiseModel::weibull_mix();
    if (name == "par-mix" || name == "parmix") return NoiseModel::pareto_mix();
    if (name == "logn-mix" || name == "lognmix") return NoiseModel::lognormal_mix();
    if (name.rfind("logn", 0) == 0) {
        double sigma = tail_number(4, 0.0);
        if (!(sigma > 0.0))
            throw std::invalid_argument("lognormal noise needs a positive sigma, e.g. logn2");
        return NoiseModel::lognormal(sigma);
    }
    if (name.rfind("t", 0) == 0) {
        double nu = tail_number(1, 3.5);
        if (!(nu > 2.0))
            throw std::invalid_argument("t noise needs more than 2 degrees of freedom");
        return NoiseModel::student_t(nu);
    }
    throw std::invalid_argument("unrecognized noise model: " + name);
}

double draw_noise(const NoiseModel& model, std::mt19937_64& stream) {
    switch (model.kind) {
        case NoiseKind::Gaussian: {
            std::normal_distribution<double> normal;
            return normal(stream);
        }
        case NoiseKind::StudentT: {
            std::student_t_distribution<double> t(model.param);
            return t(stream) / std::sqrt(model.param / (model.param - 2.0));
        }
        case NoiseKind::GammaSkew: {
            std::gamma_distribution<double> gamma(3.0, 1.0);
            return (gamma(stream) - 3.0) / std::sqrt(3.0);
        }
        case NoiseKind::WeibullMix: {
            // Both components are standardized individually; their equal-weight
            // sum has variance 1/2, hence the sqrt(2) on the way out.
            static const Moments wm = weibull_moments(0.75, 0.75);
            std::student_t_distribution<double> t4(4.0);
            std::weibull_distribution<double> wbl(0.75, 0.75);
            double ut = t4(stream) / std::sqrt(2.0);
            double uw = (wbl(stream) - wm.mean) / std::sqrt(wm.var);
            return std::sqrt(2.0) * (0.5 * ut + 0.5 * uw);
        }
        case NoiseKind::ParetoMix: {
            // Raw Pareto(4,1) plus a standard normal, standardized as a whole.
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            std::normal_distribution<double> normal;
            double pareto = std::pow(1.0 - unif(stream), -0.25);
            double raw = 0.5 * pareto + 0.5 * normal(stream);
            const double mean = 0.5 * (4.0 / 3.0);
            const double var = 0.25 * (2.0 / 9.0) + 0.25;
            return (raw - mean) / std::sqrt(var);
        }
        case NoiseKind::LognormalMix: {
            static const Moments lm = lognormal_moments(1.25);
            std::normal_distribution<double> normal;
            double ln = std::exp(1.25 * normal(stream));
            double raw = 0.5 * ln + 0.5 * normal(stream);
            const double mean = 0.5 * lm.mean;
            const double var = 0.25 * lm.var + 0.25;
            return (raw - mean) / std::sqrt(var);
        }
        case NoiseKind::Lognormal: {
            Moments lm = lognormal_moments(model.param);
            std::normal_distribution<double> normal;
            return (std::exp(model.param * normal(stream)) - lm.mean) / std::sqrt(lm.var);
        }
    }
    throw std::invalid_argument("unknown noise model");
}

void gen_noise(const NoiseModel& model, Eigen::Index n, std::mt19937_64& stream,
               Eigen::VectorXd& out) {
    if (n < 1) throw std::invalid_argument("gen_noise: n must be >= 1");
    out.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = draw_noise(model, stream);
}

bool noise_self_test(const NoiseModel& model, double* mean_out, double* var_out) {
    constexpr int kDraws = 1000000;
    std::mt19937_64 stream =
        substream(kCertStream, static_cast<std::uint64_t>(model.kind),
                  std::bit_cast<std::uint64_t>(model.param));
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < kDraws; ++i) {
        double v = draw_noise(model, stream);
        sum += v;
        sum_sq += v * v;
    }
    double mean = sum / kDraws;
    double var = sum_sq / kDraws - mean * mean;
    if (mean_out) *mean_out = mean;
    if (var_out) *var_out = var;
    return std::abs(mean) <= 0.01 && std::abs(var - 1.0) <= 0.05;
}

std::string design_name(const DesignModel& model) {
    switch (model.kind) {
        case DesignKind::IsotropicNormal: return "isotropic";
        case DesignKind::ToeplitzNormal: return "toeplitz" + fmt_short(model.rho);
        case DesignKind::UniformCorr: return "uniform" + fmt_short(model.rho);
    }
    return "unknown";
}

DesignModel parse_design(const std::string& name) {
    auto tail_number = [&](std::size_t prefix_len, double fallback) {
        std::string tail = name.substr(prefix_len);
        if (tail.empty()) return fallback;
        if (tail.front() == ':') tail.erase(0, 1);
        std::size_t used = 0;
        double v = std::stod(tail, &used);
        if (used != tail.size())
            throw std::invalid_argument("unrecognized design model: " + name);
        return v;
    };
    if (name == "isotropic" || name == "normal") return DesignModel::isotropic();
    if (name.rfind("toeplitz", 0) == 0) return DesignModel::toeplitz(tail_number(8, 0.9));
    if (name.rfind("uniform", 0) == 0) return DesignModel::uniform_corr(tail_number(7, 0.5));
    throw std::invalid_argument("unrecognized design model: " + name);
}

DesignSampler::DesignSampler(const DesignModel& model, Eigen::Index d)
    : kind_(model.kind), d_(d) {
    if (d < 1) throw std::invalid_argument("design: d must be >= 1");
    if (kind_ == DesignKind::IsotropicNormal) return;

    double rho = model.rho;
    if (kind_ == DesignKind::ToeplitzNormal && rho == 0.0) rho = 0.9;
    if (kind_ == DesignKind::UniformCorr && rho == 0.0) rho = 0.5;
    if (!(std::abs(rho) < 1.0))
        throw std::invalid_argument("design: |rho| must be below 1");

    Eigen::MatrixXd corr(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index k = 0; k < d; ++k) {
            double target = std::pow(rho, std::abs(static_cast<double>(j - k)));
            // For the copula the normal-scale correlation is solved from the
            // uniform-scale target rho_u = (6/pi) * arcsin(r/2).
            corr(j, k) = kind_ == DesignKind::UniformCorr
                             ? 2.0 * std::sin(M_PI * target / 6.0)
                             : target;
        }
    Eigen::LLT<Eigen::MatrixXd> llt(corr);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("design: correlation target is not positive definite");
    chol_ = llt.matrixL();
}

void DesignSampler::generate(Eigen::Index n, std::mt19937_64& stream,
                             Eigen::MatrixXd& out) const {
    out.resize(n, d_);
    std::normal_distribution<double> normal;
    if (kind_ == DesignKind::IsotropicNormal) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < d_; ++j) out(i, j) = normal(stream);
        return;
    }
    Eigen::VectorXd z(d_);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d_; ++j) z(j) = normal(stream);
        Eigen::VectorXd row = chol_ * z;
        if (kind_ == DesignKind::UniformCorr)
            for (Eigen::Index j = 0; j < d_; ++j) row(j) = norm_cdf(row(j));
        out.row(i) = row.transpose();
    }
}

Eigen::VectorXd make_theta(ThetaPattern pattern, Eigen::Index d,
                           std::mt19937_64* stream) {
    if (d < 1) throw std::invalid_argument("make_theta: d must be >= 1");
    if (pattern == ThetaPattern::EquallySpaced)
        return Eigen::VectorXd::LinSpaced(d, 0.0, 1.0);
    if (!stream) throw std::invalid_argument("make_theta: random pattern needs a stream");
    std::bernoulli_distribution coin(0.5);
    Eigen::VectorXd theta(d);
    for (Eigen::Index j = 0; j < d; ++j) theta(j) = coin(*stream) ? 1.0 : 0.0;
    return theta;
}

std::string method_name(CoverageMethod method) {
    switch (method) {
        case CoverageMethod::HuberSimple: return "boot-huber";
        case CoverageMethod::HuberAdaptive: return "boot-huber-adaptive";
        case CoverageMethod::HuberFixed: return "boot-huber-fixed";
        case CoverageMethod::BootOls: return "boot-ols";
    }
    return "unknown";
}

namespace {

// Substream layout inside one replication r: design (r,1), coefficients
// (r,2), noise (r,3), and a child seed (r, 10+method) per method's
// bootstrap. Everything a replication consumes is keyed by r, so the
// schedule cannot leak between replications.
struct ReplicationDraws {
    Eigen::MatrixXd x;
    Eigen::VectorXd theta_star;
    Eigen::VectorXd y;
};

ReplicationDraws draw_replication(const CoverageSpec& spec, const DesignSampler& sampler,
                                  std::int64_t r) {
    ReplicationDraws out;
    auto design_stream = substream(spec.seed, static_cast<std::uint64_t>(r), 1);
    sampler.generate(spec.n, design_stream, out.x);

    if (spec.theta_pattern == ThetaPattern::EquallySpaced) {
        out.theta_star = make_theta(spec.theta_pattern, spec.d, nullptr);
    } else {
        auto theta_stream = substream(spec.seed, static_cast<std::uint64_t>(r), 2);
        out.theta_star = make_theta(spec.theta_pattern, spec.d, &theta_stream);
    }

    Eigen::VectorXd eps;
    auto noise_stream = substream(spec.seed, static_cast<std::uint64_t>(r), 3);
    gen_noise(spec.noise, spec.n, noise_stream, eps);
    out.y = out.x * out.theta_star + eps;
    return out;
}

}  // namespace

CoverageReport coverage_experiment(const CoverageSpec& spec) {
    if (spec.replications < 1) throw std::invalid_argument("coverage: need replications >= 1");
    if (spec.B < 1) throw std::invalid_argument("coverage: need B >= 1");
    if (spec.alphas.empty()) throw std::invalid_argument("coverage: empty alpha grid");
    for (double a : spec.alphas)
        if (!(a > 0.0) || !(a < 1.0))
            throw std::invalid_argument("coverage: alphas must lie in (0,1)");
    if (spec.methods.empty()) throw std::invalid_argument("coverage: no methods selected");
    for (CoverageMethod m : spec.methods)
        if (m == CoverageMethod::HuberFixed && !(spec.fixed_tau > 0.0))
            throw std::invalid_argument("coverage: fixed-tau method needs fixed_tau > 0");
    if (!noise_self_test(spec.noise))
        throw std::runtime_error("coverage: noise model failed the moment self-test");

    const DesignSampler sampler(spec.design, spec.d);
    const auto n_methods = spec.methods.size();
    const auto n_alphas = spec.alphas.size();
    const auto reps = static_cast<std::size_t>(spec.replications);

    std::vector<char> covered(reps * n_methods * n_alphas, 0);
    std::vector<char> failed(reps * n_methods, 0);

    parallel_for(spec.replications, spec.threads, [&](std::int64_t r) {
        ReplicationDraws draws = draw_replication(spec, sampler, r);
        Dataset data{draws.x, draws.y};

        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            const CoverageMethod method = spec.methods[mi];
            BootstrapConfig bc;
            bc.B = spec.B;
            bc.scheme = spec.weights;
            bc.alpha = 0.5;  // thresholds are computed per alpha below
            bc.threads = 1;
            bc.seed = subkey(spec.seed, static_cast<std::uint64_t>(r), 10 + mi);

            try {
                std::vector<double> samples;
                double excess_true = 0.0;

                if (method == CoverageMethod::BootOls) {
                    Eigen::VectorXd theta_hat = fit_ols(data);
                    samples = ols_bootstrap_excess_samples(data, theta_hat, bc);
                    excess_true =
                        0.5 * ((data.y - data.x * draws.theta_star).squaredNorm() -
                               (data.y - data.x * theta_hat).squaredNorm());
                } else {
                    double tau = 0.0;
                    const Eigen::VectorXd* init = nullptr;
                    IrlsResult irls;
                    switch (method) {
                        case CoverageMethod::HuberSimple:
                            tau = simple_tau_rule(data, TauPurpose::Bootstrap);
                            if (!(tau > 0.0))
                                throw degenerate_data_error("coverage: zero residual scale");
                            break;
                        case CoverageMethod::HuberAdaptive: {
                            IrlsConfig ic;
                            ic.t = std::log(static_cast<double>(spec.n));
                            ic.order = 4;
                            irls = irls_fit(data, ic);
                            if (irls.degenerate || !irls.converged)
                                throw degenerate_data_error("coverage: adaptive calibration failed");
                            tau = irls.tau;
                            init = &irls.theta;
                            break;
                        }
                        default:
                            tau = spec.fixed_tau;
                            break;
                    }
                    bc.tau = tau;
                    FitResult fit = fit_huber(data, tau, {}, nullptr, init);
                    if (!fit.converged)
                        throw convergence_error("coverage: point fit did not converge");
                    samples = bootstrap_excess_samples(data, fit.theta, bc);
                    excess_true =
                        huber_objective(data, draws.theta_star, tau) - fit.objective;
                }

                for (std::size_t ai = 0; ai < n_alphas; ++ai) {
                    bool in = excess_true <= bootstrap_threshold(samples, spec.alphas[ai]);
                    covered[(static_cast<std::size_t>(r) * n_methods + mi) * n_alphas + ai] =
                        in ? 1 : 0;
                }
            } catch (const degenerate_data_error&) {
                failed[static_cast<std::size_t>(r) * n_methods + mi] = 1;
            } catch (const singular_matrix_error&) {
                failed[static_cast<std::size_t>(r) * n_methods + mi] = 1;
            } catch (const convergence_error&) {
                failed[static_cast<std::size_t>(r) * n_methods + mi] = 1;
            } catch (const replication_budget_error&) {
                failed[static_cast<std::size_t>(r) * n_methods + mi] = 1;
            }
        }
    });

    CoverageReport report;
    report.spec = spec;
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
        int method_failures = 0;
        for (std::size_t r = 0; r < reps; ++r)
            if (failed[r * n_methods + mi]) ++method_failures;
        if (method_failures > 0.01 * spec.replications)
            throw replication_budget_error(
                "coverage: method " + method_name(spec.methods[mi]) + " failed " +
                std::to_string(method_failures) + " of " +
                std::to_string(spec.replications) + " replications (budget is 1%)");

        const int used = spec.replications - method_failures;
        for (std::size_t ai = 0; ai < n_alphas; ++ai) {
            int hits = 0;
            for (std::size_t r = 0; r < reps; ++r)
                if (!failed[r * n_methods + mi] && covered[(r * n_methods + mi) * n_alphas + ai])
                    ++hits;
            CoverageCell cell;
            cell.method = spec.methods[mi];
            cell.alpha = spec.alphas[ai];
            cell.reps = used;
            cell.coverage = used > 0 ? static_cast<double>(hits) / used : 0.0;
            cell.se = used > 0 ? std::sqrt(cell.coverage * (1.0 - cell.coverage) / used) : 0.0;
            report.cells.push_back(cell);
        }
    }
    return report;
}

MTestSimReport mtest_experiment(const MTestSimSpec& spec) {
    if (spec.replications < 1) throw std::invalid_argument("mtest: need replications >= 1");
    if (spec.B < 1) throw std::invalid_argument("mtest: need B >= 1");
    if (spec.m < 1 || spec.n < spec.s + 2)
        throw std::invalid_argument("mtest: need m >= 1 and n >= s + 2");
    if (spec.alphas.empty()) throw std::invalid_argument("mtest: empty alpha grid");
    for (double a : spec.alphas)
        if (!(a > 0.0) || !(a < 1.0))
            throw std::invalid_argument("mtest: alphas must lie in (0,1)");
    if (spec.gamma < 0.0) throw std::invalid_argument("mtest: gamma must be >= 0");
    if (!noise_self_test(spec.noise))
        throw std::runtime_error("mtest: noise model failed the moment self-test");

    const auto m1 = static_cast<Eigen::Index>(0.05 * static_cast<double>(spec.m));
    const bool has_signal = spec.gamma != 0.0 && m1 > 0;
    const double signal =
        spec.gamma * std::sqrt(2.0 * std::log(static_cast<double>(spec.m)) /
                               static_cast<double>(spec.n));
    std::vector<bool> is_null(static_cast<std::size_t>(spec.m), true);
    if (has_signal)
        for (Eigen::Index k = 0; k < m1; ++k) is_null[static_cast<std::size_t>(k)] = false;

    const auto n_alphas = spec.alphas.size();
    const auto reps = static_cast<std::size_t>(spec.replications);
    std::vector<double> fdp_vals(reps * n_alphas, 0.0);
    std::vector<double> power_vals(reps * n_alphas, 0.0);
    std::vector<char> failed(reps, 0);

    parallel_for(spec.replications, spec.threads, [&](std::int64_t r) {
        PanelData panel;
        panel.x.resize(spec.n, spec.s);
        {
            auto stream = substream(spec.seed, static_cast<std::uint64_t>(r), 1);
            std::normal_distribution<double> normal;
            for (Eigen::Index i = 0; i < spec.n; ++i)
                for (Eigen::Index j = 0; j < spec.s; ++j) panel.x(i, j) = normal(stream);
        }
        Eigen::MatrixXd beta(spec.s, spec.m);
        {
            auto stream = substream(spec.seed, static_cast<std::uint64_t>(r), 2);
            std::uniform_real_distribution<double> unif(-1.0, 1.0);
            for (Eigen::Index k = 0; k < spec.m; ++k)
                for (Eigen::Index j = 0; j < spec.s; ++j) beta(j, k) = unif(stream);
        }
        panel.y.resize(spec.n, spec.m);
        {
            auto stream = substream(spec.seed, static_cast<std::uint64_t>(r), 3);
            for (Eigen::Index k = 0; k < spec.m; ++k) {
                double mu_k = (has_signal && k < m1) ? signal : 0.0;
                for (Eigen::Index i = 0; i < spec.n; ++i)
                    panel.y(i, k) = mu_k + panel.x.row(i) * beta.col(k) +
                                    draw_noise(spec.noise, stream);
            }
        }

        MTestConfig mc;
        mc.B = spec.B;
        mc.alpha = spec.alphas.front();
        mc.scheme = spec.weights;
        mc.seed = subkey(spec.seed, static_cast<std::uint64_t>(r), 4);
        mc.tau_rule = spec.tau_rule;
        mc.threads = 1;

        try {
            Eigen::VectorXd taus;
            if (spec.tau_rule == MTestTauRule::CubeRoot) {
                taus = tau_rule_cube_root(spec.n, spec.m, spec.s,
                                          default_column_scales(panel, false));
            } else {
                taus.resize(spec.m);
                for (Eigen::Index k = 0; k < spec.m; ++k) {
                    Dataset col;
                    col.x.resize(spec.n, spec.s + 1);
                    col.x.col(0).setOnes();
                    col.x.rightCols(spec.s) = panel.x;
                    col.y = panel.y.col(k);
                    taus(k) = simple_tau_rule(col, TauPurpose::Bootstrap);
                }
            }
            ColumnFits fits = fit_all(panel, taus);
            std::vector<double> p = bootstrap_pvalues(panel, fits, mc);

            for (std::size_t ai = 0; ai < n_alphas; ++ai) {
                BhSelection bh = bh_threshold(p, spec.alphas[ai]);
                fdp_vals[static_cast<std::size_t>(r) * n_alphas + ai] =
                    fdp(bh.rejected, is_null);
                if (has_signal) {
                    int caught = 0;
                    for (Eigen::Index k = 0; k < m1; ++k)
                        if (bh.rejected[static_cast<std::size_t>(k)]) ++caught;
                    power_vals[static_cast<std::size_t>(r) * n_alphas + ai] =
                        static_cast<double>(caught) / static_cast<double>(m1);
                }
            }
        } catch (const degenerate_data_error&) {
            failed[static_cast<std::size_t>(r)] = 1;
        } catch (const singular_matrix_error&) {
            failed[static_cast<std::size_t>(r)] = 1;
        } catch (const convergence_error&) {
            failed[static_cast<std::size_t>(r)] = 1;
        } catch (const replication_budget_error&) {
            failed[static_cast<std::size_t>(r)] = 1;
        }
    });

    int failures = 0;
    for (std::size_t r = 0; r < reps; ++r)
        if (failed[r]) ++failures;
    if (failures > 0.01 * spec.replications)
        throw replication_budget_error("mtest: " + std::to_string(failures) + " of " +
                                       std::to_string(spec.replications) +
                                       " replications failed (budget is 1%)");
    const int used = spec.replications - failures;

    MTestSimReport report;
    report.spec = spec;
    for (std::size_t ai = 0; ai < n_alphas; ++ai) {
        MTestCell cell;
        cell.alpha = spec.alphas[ai];
        cell.reps = used;
        cell.has_power = has_signal;
        double fdp_sum = 0.0, power_sum = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            if (failed[r]) continue;
            fdp_sum += fdp_vals[r * n_alphas + ai];
            power_sum += power_vals[r * n_alphas + ai];
        }
        if (used > 0) {
            cell.fdp_mean = fdp_sum / used;
            cell.fdp_se = std::sqrt(cell.fdp_mean * (1.0 - cell.fdp_mean) / used);
            if (has_signal) {
                cell.power_mean = power_sum / used;
                cell.power_se =
                    std::sqrt(cell.power_mean * (1.0 - cell.power_mean) / used);
            }
        }
        report.cells.push_back(cell);
    }
    return report;
}

void write_coverage_csv(const CoverageReport& report, std::ostream& os) {
    os << "noise,design,method,n,d,B,reps,alpha,coverage,se,seed\n";
    for (const CoverageCell& cell : report.cells) {
        os << noise_name(report.spec.noise) << ',' << design_name(report.spec.design)
           << ',' << method_name(cell.method) << ',' << report.spec.n << ','
           << report.spec.d << ',' << report.spec.B << ',' << cell.reps << ','
           << fmt_g17(cell.alpha) << ',' << fmt_g17(cell.coverage) << ','
           << fmt_g17(cell.se) << ',' << report.spec.seed << '\n';
    }
}

void write_mtest_csv(const MTestSimReport& report, std::ostream& os) {
    os << "noise,n,s,m,gamma,B,reps,alpha,fdp,fdp_se,power,power_se,seed\n";
    for (const MTestCell& cell : report.cells) {
        os << noise_name(report.spec.noise) << ',' << report.spec.n << ','
           << report.spec.s << ',' << report.spec.m << ','
           << fmt_g17(report.spec.gamma) << ',' << report.spec.B << ',' << cell.reps
           << ',' << fmt_g17(cell.alpha) << ',' << fmt_g17(cell.fdp_mean) << ','
           << fmt_g17(cell.fdp_se) << ',';
        if (cell.has_power)
            os << fmt_g17(cell.power_mean) << ',' << fmt_g17(cell.power_se);
        else
            os << ',';
        os << ',' << report.spec.seed << '\n';
    }
}

}  // namespace huberboot
