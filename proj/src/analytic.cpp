#include "aloha_noma/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "aloha_noma/error.hpp"

namespace aloha_noma::analytic {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Streaming log-sum-exp: holds log(sum) as max + log(scaled sum).
class LogSumExp
{
  public:
    void add(double logTerm)
    {
        if (logTerm == kNegInf)
            return;
        if (logTerm > max_) {
            scaled_ = scaled_ * std::exp(max_ - logTerm) + 1.0;
            max_ = logTerm;
        } else {
            scaled_ += std::exp(logTerm - max_);
        }
    }

    double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(scaled_); }

  private:
    double max_ = kNegInf;
    double scaled_ = 0.0;
};

// log of the two parts of dS/dG = e^{-x} (A - B), x = 2G:
//   A = sum_{k=0..N-1} x^k / k!,   B = x^N / (N-1)!
struct DerivativeParts
{
    double logA;
    double logB;
};

DerivativeParts derivative_parts(double x, int n)
{
    const double logX = std::log(x);
    LogSumExp a;
    double logFactorial = 0.0; // log k!
    for (int k = 0; k < n; ++k) {
        if (k > 0)
            logFactorial += std::log(static_cast<double>(k));
        a.add(k * logX - logFactorial);
    }
    // the loop leaves log (N-1)!
    return {a.value(), n * logX - logFactorial};
}

} // namespace

OfferedLoad::OfferedLoad(double g) : g_(g)
{
    if (!std::isfinite(g) || g < 0.0) {
        std::ostringstream msg;
        msg << "offered load G must be finite and >= 0, got " << g;
        throw InvalidArgument(msg.str());
    }
}

SicDegree::SicDegree(int n) : n_(n)
{
    if (n < 1)
        throw InvalidArgument("SIC degree N must be >= 1, got " + std::to_string(n));
}

double poisson_arrival_pmf(int i, double twoG)
{
    if (i < 0)
        throw InvalidArgument("arrival count i must be >= 0");
    if (!std::isfinite(twoG))
        throw InvalidArgument("Poisson mean must be finite");
    if (twoG < 0.0)
        throw InvalidArgument("Poisson mean must be >= 0");

    if (twoG == 0.0)
        return i == 0 ? 1.0 : 0.0;

    double p;
    if (i > 20 || twoG > 30.0) {
        p = std::exp(i * std::log(twoG) - twoG - std::lgamma(i + 1.0));
    } else {
        double factorial = 1.0;
        for (int k = 2; k <= i; ++k)
            factorial *= k;
        p = std::pow(twoG, i) * std::exp(-twoG) / factorial;
    }
    return std::min(1.0, std::max(0.0, p));
}

double throughput(OfferedLoad G, SicDegree N)
{
    const double g = G.value();
    if (g == 0.0)
        return 0.0;

    const double x = 2.0 * g;
    const double logX = std::log(x);
    const double logPrefactor = -x - std::numbers::ln2;

    // term_i = e^{-x}/2 * x^i / (i-1)!
    LogSumExp sum;
    double logFactorial = 0.0; // log (i-1)!
    for (int i = 1; i <= N.value(); ++i) {
        if (i > 1)
            logFactorial += std::log(static_cast<double>(i - 1));
        sum.add(logPrefactor + i * logX - logFactorial);
    }
    return std::exp(sum.value());
}

double throughput_derivative(OfferedLoad G, SicDegree N)
{
    const double g = G.value();
    if (g == 0.0)
        return 1.0; // A = 1, B = 0
    const double x = 2.0 * g;
    const auto parts = derivative_parts(x, N.value());
    return std::exp(parts.logA - x) - std::exp(parts.logB - x);
}

int throughput_derivative_sign(OfferedLoad G, SicDegree N)
{
    const double g = G.value();
    if (g == 0.0)
        return 1;
    const auto parts = derivative_parts(2.0 * g, N.value());
    if (parts.logA > parts.logB)
        return 1;
    if (parts.logA < parts.logB)
        return -1;
    return 0;
}

MaxThroughputResult max_throughput(SicDegree N, double tol)
{
    if (!(tol > 0.0 && tol <= 1e-3))
        throw InvalidArgument("root tolerance must lie in (0, 1e-3]");

    const int n = N.value();
    const double gMax = 10.0 * n;
    constexpr double kGridStart = 1e-4;
    constexpr double kGridRatio = 1.02;

    auto sign_at = [&](double g) { return throughput_derivative_sign(OfferedLoad{g}, N); };

    // Scan the whole grid: the bracket is the first +/- change and no other
    // change may follow it.
    double lo = 0.0;
    double hi = 0.0;
    int changes = 0;
    double prevG = kGridStart;
    int prevSign = sign_at(prevG);
    for (double g = kGridStart * kGridRatio;; g *= kGridRatio) {
        const double gClamped = std::min(g, gMax);
        const int s = sign_at(gClamped);
        if (s != 0 && prevSign != 0 && s != prevSign) {
            ++changes;
            if (changes == 1 && prevSign > 0) {
                lo = prevG;
                hi = gClamped;
            }
        }
        if (s != 0) {
            prevSign = s;
            prevG = gClamped;
        }
        if (gClamped >= gMax)
            break;
    }

    if (changes == 0 || hi == 0.0) {
        throw BracketingError(n, "no sign change of dS/dG in (0, " + std::to_string(gMax) +
                                     "] for N=" + std::to_string(n));
    }
    if (changes > 1) {
        throw BracketingError(n, std::to_string(changes) + " sign changes of dS/dG for N=" +
                                     std::to_string(n) + "; throughput is not unimodal");
    }

    while (hi - lo >= tol) {
        const double mid = 0.5 * (lo + hi);
        const int s = sign_at(mid);
        if (s == 0) {
            lo = hi = mid;
            break;
        }
        (s > 0 ? lo : hi) = mid;
    }

    MaxThroughputResult result;
    result.degree = n;
    result.gStar = 0.5 * (lo + hi);
    result.sMax = throughput(OfferedLoad{result.gStar}, N);
    result.derivativeResidual = throughput_derivative(OfferedLoad{result.gStar}, N);
    return result;
}

ThroughputCurve throughput_curve(SicDegree N, std::span<const double> gGrid)
{
    for (std::size_t k = 0; k < gGrid.size(); ++k) {
        static_cast<void>(OfferedLoad{gGrid[k]});
        if (k > 0 && !(gGrid[k] > gGrid[k - 1]))
            throw InvalidArgument("load grid must be strictly increasing");
    }

    ThroughputCurve curve;
    curve.degree = N.value();
    curve.points.reserve(gGrid.size());
    for (double g : gGrid)
        curve.points.push_back({g, throughput(OfferedLoad{g}, N)});
    return curve;
}

} // namespace aloha_noma::analytic
