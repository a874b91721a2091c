#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "huberboot/bootstrap.hpp"
#include "huberboot/multitest.hpp"

namespace huberboot {

// Error laws used by the experiments. Every variant is standardized with
// its analytic moments so draws have mean 0 and variance 1:
//   Gaussian      N(0,1)
//   StudentT      t_nu / sqrt(nu/(nu-2)), nu > 2 (default 3.5)
//   GammaSkew     (Gamma(3,1) - 3)/sqrt(3)
//   WeibullMix    sqrt(2) * (0.5*std t_4 + 0.5*std Weibull(0.75, 0.75))
//   ParetoMix     standardized 0.5*Pareto(4,1) + 0.5*N(0,1)
//   LognormalMix  standardized 0.5*exp(1.25 Z) + 0.5*N(0,1)
//   Lognormal     standardized exp(sigma Z) (sigma is the param)
enum class NoiseKind {
    Gaussian,
    StudentT,
    GammaSkew,
    WeibullMix,
    ParetoMix,
    LognormalMix,
    Lognormal
};

struct NoiseModel {
    NoiseKind kind = NoiseKind::Gaussian;
    double param = 0.0;  // StudentT: degrees of freedom; Lognormal: sigma

    static NoiseModel gaussian() { return {NoiseKind::Gaussian, 0.0}; }
    static NoiseModel student_t(double nu = 3.5) { return {NoiseKind::StudentT, nu}; }
    static NoiseModel gamma_skew() { return {NoiseKind::GammaSkew, 0.0}; }
    static NoiseModel weibull_mix() { return {NoiseKind::WeibullMix, 0.0}; }
    static NoiseModel pareto_mix() { return {NoiseKind::ParetoMix, 0.0}; }
    static NoiseModel lognormal_mix() { return {NoiseKind::LognormalMix, 0.0}; }
    static NoiseModel lognormal(double sigma) { return {NoiseKind::Lognormal, sigma}; }
};

std::string noise_name(const NoiseModel& model);
NoiseModel parse_noise(const std::string& name);

double draw_noise(const NoiseModel& model, std::mt19937_64& stream);
void gen_noise(const NoiseModel& model, Eigen::Index n, std::mt19937_64& stream,
               Eigen::VectorXd& out);

// 10^6-draw certification that a noise model is properly standardized:
// sample mean within 0.01 of 0 and sample variance within 0.05 of 1 on a
// fixed internal stream. Experiments run this before touching the model.
bool noise_self_test(const NoiseModel& model, double* mean_out = nullptr,
                     double* var_out = nullptr);

enum class DesignKind { IsotropicNormal, ToeplitzNormal, UniformCorr };

struct DesignModel {
    DesignKind kind = DesignKind::IsotropicNormal;
    double rho = 0.0;  // Toeplitz default 0.9; uniform-correlation default 0.5

    static DesignModel isotropic() { return {DesignKind::IsotropicNormal, 0.0}; }
    static DesignModel toeplitz(double rho = 0.9) { return {DesignKind::ToeplitzNormal, rho}; }
    static DesignModel uniform_corr(double rho = 0.5) { return {DesignKind::UniformCorr, rho}; }
};

std::string design_name(const DesignModel& model);
DesignModel parse_design(const std::string& name);

// Owns the one-time factorization behind correlated designs; generate() is
// const and safe to call concurrently with distinct streams.
//   IsotropicNormal: iid N(0,1) entries.
//   ToeplitzNormal:  rows ~ N(0, Sigma), Sigma_jk = rho^|j-k|.
//   UniformCorr:     Gaussian copula with normal correlation 2*sin(pi*r/6)
//                    applied entrywise to the target r = rho^|j-k|, then
//                    Phi-transformed to uniform marginals on [0,1].
class DesignSampler {
  public:
    DesignSampler(const DesignModel& model, Eigen::Index d);
    void generate(Eigen::Index n, std::mt19937_64& stream, Eigen::MatrixXd& out) const;

  private:
    DesignKind kind_;
    Eigen::Index d_;
    Eigen::MatrixXd chol_;  // lower factor of the relevant correlation matrix
};

enum class ThetaPattern { EquallySpaced, BernoulliHalf };

// Equally spaced on [0, 1] (deterministic), or iid Ber(0.5) components drawn
// from the given stream.
Eigen::VectorXd make_theta(ThetaPattern pattern, Eigen::Index d,
                           std::mt19937_64* stream);

enum class CoverageMethod { HuberSimple, HuberAdaptive, HuberFixed, BootOls };
std::string method_name(CoverageMethod method);

struct CoverageSpec {
    NoiseModel noise;
    DesignModel design;
    Eigen::Index n = 100;
    Eigen::Index d = 5;
    int B = 2000;
    int replications = 1000;
    std::vector<double> alphas = {0.05, 0.10, 0.15, 0.20, 0.25};
    std::vector<CoverageMethod> methods = {CoverageMethod::HuberSimple,
                                           CoverageMethod::BootOls};
    ThetaPattern theta_pattern = ThetaPattern::EquallySpaced;
    WeightScheme weights;
    double fixed_tau = 0.0;  // required by the HuberFixed method
    std::uint64_t seed = 0;
    int threads = 1;
};

struct CoverageCell {
    CoverageMethod method;
    double alpha = 0.0;
    double coverage = 0.0;
    double se = 0.0;
    int reps = 0;  // replications actually aggregated (failures excluded)
};

struct CoverageReport {
    CoverageSpec spec;
    std::vector<CoverageCell> cells;
};

// One replication: draw design, coefficients, noise; fit each method's
// point estimate; bootstrap its excess-loss samples once; test whether the
// truth lies inside the set at every alpha (the same draws serve the whole
// alpha grid). Per-method failures are counted and capped at 1% of the
// replication budget.
CoverageReport coverage_experiment(const CoverageSpec& spec);

struct MTestSimSpec {
    NoiseModel noise;
    Eigen::Index n = 100;
    Eigen::Index s = 5;
    Eigen::Index m = 1000;
    double gamma = 3.0;  // signal strength; 0 means a global null
    int B = 500;
    int replications = 1000;
    std::vector<double> alphas = {0.05, 0.10, 0.15, 0.20, 0.25};
    WeightScheme weights;
    MTestTauRule tau_rule = MTestTauRule::CubeRoot;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct MTestCell {
    double alpha = 0.0;
    double fdp_mean = 0.0;
    double fdp_se = 0.0;
    double power_mean = 0.0;  // meaningful only when has_power
    double power_se = 0.0;
    bool has_power = false;
    int reps = 0;
};

struct MTestSimReport {
    MTestSimSpec spec;
    std::vector<MTestCell> cells;
};

// One replication: panel with mu_k = gamma*sqrt(2 log m / n) on the first
// 5% of columns, per-column p-values computed once, then the step-up rule
// applied at every alpha.
MTestSimReport mtest_experiment(const MTestSimSpec& spec);

// CSV emission; headers and column order are part of the contract:
//   coverage: noise,design,method,n,d,B,reps,alpha,coverage,se,seed
//   mtest:    noise,n,s,m,gamma,B,reps,alpha,fdp,fdp_se,power,power_se,seed
// LF line endings, full-precision floats; power fields are empty under a
// global null.
void write_coverage_csv(const CoverageReport& report, std::ostream& os);
void write_mtest_csv(const MTestSimReport& report, std::ostream& os);

}  // namespace huberboot
