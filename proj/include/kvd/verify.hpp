#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "kvd/eigenfunctions.hpp"
#include "kvd/vandiejen.hpp"

namespace kvd {

enum class IdentityId {
    GammaFE,
    Reflection,
    KeyLemma,
    SourceThm,
    Lemma1,
    Cor1,
    Cor2,
    Cor3,
    Cor4,
    Cor5,
    Cor6,
    QuasiInvariance,
    AntiSymmetry,
    Swap,
    Oddness,
    QuasiPeriod,
    Duplication,
    ThetaProduct,
};

std::string_view to_string(IdentityId id);
IdentityId parse_identity(std::string_view text);  // names as printed by to_string
const std::vector<IdentityId>& all_identities();

// Residual normalized by the largest single term of the identity.
struct Residual {
    double residual = 0;  // relative
    double scale = 0;
};

// One identity at one sample point.
struct ResidualRecord {
    IdentityId identity = IdentityId::GammaFE;
    CaseKind kind = CaseKind::I;
    std::string variant;
    bool control = false;  // negative control: the expected outcome is a large residual
    std::uint64_t seed = 0;
    int index = 0;
    std::vector<std::complex<double>> point;
    std::vector<double> params;
    double residual = 0;
    double scale = 0;
    double tolerance = 0;
    bool pass = false;  // outcome matched the expectation
    std::string flag;
    std::string error;
};

// Aggregate over the records of one (identity, case, variant).
struct ResidualReport {
    IdentityId identity = IdentityId::GammaFE;
    CaseKind kind = CaseKind::I;
    std::string variant;
    bool control = false;
    int sample_count = 0;
    double max_rel_residual = 0;
    double min_rel_residual = 0;
    double normalization_scale = 0;  // at the worst point
    double tolerance = 0;
    bool pass = true;
    std::uint64_t seed = 0;
};

std::vector<ResidualReport> summarize(const std::vector<ResidualRecord>& records);

// Residual above which a negative control counts as failed, as expected.
inline constexpr double kControlFloor = 1e-3;

// mt19937_64 with a fixed mapping to reals (the standard distributions are implementation-defined).
class Sampler {
public:
    explicit Sampler(std::uint64_t seed);
    std::uint64_t next();
    double uniform(double lo, double hi);
    std::complex<double> box(double re_half, double im_half, std::complex<double> center = {});
    int below(int n);

private:
    std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index);

struct SampleStats {
    int accepted = 0;
    int rejected = 0;
};

// Random X in a box around `center` with X_J, 2X_J and X_J +- X_K at least
// `separation` from the zero lattice. Throws DomainError after max_tries rejections.
std::vector<std::complex<double>> admissible_point(const CaseParams<double>& cs, std::size_t count,
                                                   Sampler& rng, double re_half, double im_half,
                                                   double separation, SampleStats* stats = nullptr,
                                                   int max_tries = 500);

// Seeded configurations sharing the template's case, couplings and masses.
std::vector<Configuration<double>> sample_admissible(const Configuration<double>& tmpl, int count,
                                                     std::uint64_t seed, SampleStats* stats = nullptr,
                                                     double re_half = 1.0, double im_half = 0.2,
                                                     double separation = 0.05);

// ---- residuals -----------------------------------------------------------

template <class R>
Residual residual_key_lemma(const CaseParams<R>& cs, const KeyLemmaParams<R>& klp, const cvec<R>& X,
                            const cvec<R>& m, const TruncationPolicy& policy = {});

// Conjugated operator on 1 minus the theorem constant.
template <class R>
Residual residual_source(const Configuration<R>& config);

// Square-rooted symmetric operator conjugated by Phi, against the plain-coefficient
// operator, on `fn`. Roots are continued from the real reference X0; the sheet of each
// coefficient-root pair is fixed at X0. With `fault`, the first psi factor of Phi
// flips sheet at the shifted points only.
template <class R>
Residual residual_lemma1(const Configuration<R>& config, const TestFunction<R>& fn, const cvec<R>& X0,
                         bool fault = false);

// Exponential test functions; id 0 is the constant 1.
template <class R>
TestFunction<R> exponential_test_function(int id, std::size_t arity, std::uint64_t seed);

// How kernel identities obtain ratios of the interaction factor.
enum class RatioMode { Closure, Direct };

// Corollary `which` in 1..6. X holds the blocks x, xt, y, yt in this order with sizes
// from `counts`; blocks the corollary does not use must be empty.
template <class R>
Residual residual_corollary(const CaseParams<R>& cs, const CouplingSet<R>& cp, int which,
                            const ParticleCounts& counts, const cvec<R>& X,
                            RatioMode mode = RatioMode::Closure, const TruncationPolicy& policy = {});

// Balancing display of corollary `which` (case IV).
BalanceKind corollary_balance(int which);

// Shift condition on the hyperplane x = xt at h (case II, one variable per block).
template <class R>
Residual residual_quasi_invariance(const CaseParams<R>& cs, const CouplingSet<R>& cp, int n,
                                   PowerSumWeight weight, const cplx<R>& h);

// Jump of A_{1,1} p_n across the coefficient pole x - xt = i(lambda+1)beta/2, relative to the
// largest term; small when the pole cancels.
template <class R>
Residual residual_quasi_pole(const CaseParams<R>& cs, const CouplingSet<R>& cp, int n,
                             PowerSumWeight weight, const cplx<R>& xt, const R& eta,
                             const TruncationPolicy& policy = {});

// A(g, lambda, -beta) = -A(g, lambda, beta), or with `literal` the form with -g as well.
template <class R>
Residual residual_antisymmetry(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                               const cvec<R>& xt, const BlockFunction<R>& fn, bool literal,
                               const TruncationPolicy& policy = {});

// Block swap with (g', 1/lambda, -lambda beta); g' = (lambda + 1 - 2g)/(2 lambda), or with
// `literal` (2g - lambda - 1)/(2 lambda).
template <class R>
Residual residual_swap(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                       const cvec<R>& xt, const BlockFunction<R>& fn, bool literal,
                       const TruncationPolicy& policy = {});

template <class R>
Residual residual_gamma_fe(const CaseParams<R>& cs, const cplx<R>& alpha, const cplx<R>& x,
                           const TruncationPolicy& policy = {});
template <class R>
Residual residual_reflection(const CaseParams<R>& cs, const cplx<R>& alpha, const cplx<R>& x,
                             const TruncationPolicy& policy = {});
template <class R>
Residual residual_oddness(const CaseParams<R>& cs, const cplx<R>& x, const TruncationPolicy& policy = {});
template <class R>
Residual residual_quasi_period(const CaseParams<R>& cs, const cplx<R>& x,
                               const TruncationPolicy& policy = {});
template <class R>
Residual residual_duplication(const CaseParams<R>& cs, const cplx<R>& x,
                              const TruncationPolicy& policy = {});
template <class R>
Residual residual_theta_product(const cplx<R>& z, const cplx<R>& tau, const TruncationPolicy& policy = {});

// ---- runner --------------------------------------------------------------

struct VerifySettings {
    std::vector<CaseKind> cases{CaseKind::I, CaseKind::II, CaseKind::III, CaseKind::IV};
    std::vector<IdentityId> identities;
    int samples = 0;  // points per variant; 0 selects the per-identity default
    std::uint64_t seed = 1;
    std::optional<double> tol;
    TruncationPolicy policy{};
    int jobs = 1;
    int max_n = 3;
    bool no_balance = false;  // case IV: only the unbalanced negative controls
    std::optional<std::vector<MassTag>> masses;
    std::optional<ParticleCounts> particles;
    std::optional<std::vector<double>> g;
    std::optional<double> lambda;
    std::optional<double> beta;
    std::optional<double> r;
    std::optional<double> a;
    bool extended = false;

    bool operator==(const VerifySettings&) const = default;
};

// Default points per variant and tolerance for an identity.
int default_samples(IdentityId id);
double default_tolerance(IdentityId id, CaseKind kind);

CaseParams<double> default_case(CaseKind kind, const VerifySettings& settings);

// Runs every selected identity; records are ordered by (identity, case, variant, point)
// independent of the number of jobs. `stats` counts evaluated and retried points.
std::vector<ResidualRecord> run_verification(const VerifySettings& settings, SampleStats* stats = nullptr);

}  // namespace kvd
