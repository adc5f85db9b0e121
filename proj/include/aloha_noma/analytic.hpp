#pragma once

#include <span>
#include <vector>

namespace aloha_noma::analytic {

/// Normalized offered load G = g*T (mean arrivals per packet duration).
class OfferedLoad
{
  public:
    // Throws InvalidArgument unless G is finite and >= 0.
    explicit OfferedLoad(double g);

    double value() const noexcept { return g_; }

  private:
    double g_;
};

/// Number of overlapping signals a SIC(N) receiver can separate.
class SicDegree
{
  public:
    // Throws InvalidArgument unless N >= 1.
    explicit SicDegree(int n);

    int value() const noexcept { return n_; }

  private:
    int n_;
};

struct ThroughputPoint
{
    double G = 0.0;
    double S = 0.0;
};

struct ThroughputCurve
{
    int degree = 1;
    std::vector<ThroughputPoint> points;
};

struct MaxThroughputResult
{
    int degree = 1;
    double gStar = 0.0;
    double sMax = 0.0;
    double derivativeResidual = 0.0;
};

inline constexpr double kDefaultRootTolerance = 1e-9;

/// Probability of exactly i arrivals in a vulnerable window whose Poisson
/// mean is twoG = 2G. Switches to the log domain when i > 20 or twoG > 30.
double poisson_arrival_pmf(int i, double twoG);

/// Normalized throughput of unslotted ALOHA resolved by SIC(N):
///
///     S(G) = e^{-2G}/2 * sum_{i=1..N} (2G)^i / (i-1)!
///
/// The terms are accumulated with log-sum-exp, so large N with large G
/// neither overflows nor underflows. S(0) is exactly 0.
double throughput(OfferedLoad G, SicDegree N);

/// dS/dG in closed form.
///
/// Writing x = 2G, the derivative collapses to
///
///     dS/dG = e^{-x} * ( sum_{k=0..N-1} x^k/k!  -  x^N/(N-1)! )
///
/// which is evaluated from its two log-domain parts. It shares no code with
/// throughput(), so comparing the two is a real check.
double throughput_derivative(OfferedLoad G, SicDegree N);

/// Sign of dS/dG computed from the log-domain parts without forming the
/// e^{-x} factor; stays meaningful where the derivative itself underflows.
int throughput_derivative_sign(OfferedLoad G, SicDegree N);

/// Maximizes S(G) for a fixed degree. Scans a geometric grid over (0, 10N]
/// for the sign change of dS/dG, requires that change to be unique, then
/// bisects until the bracket is narrower than tol.
///
/// Throws InvalidArgument for tol outside (0, 1e-3] and BracketingError when
/// the scan finds no sign change or more than one.
MaxThroughputResult max_throughput(SicDegree N, double tol = kDefaultRootTolerance);

/// Evaluates S on a strictly increasing, non-negative grid.
ThroughputCurve throughput_curve(SicDegree N, std::span<const double> gGrid);

} // namespace aloha_noma::analytic
