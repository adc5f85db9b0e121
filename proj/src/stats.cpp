#include "aloha_noma/stats.hpp"

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "aloha_noma/error.hpp"

namespace aloha_noma {

double t_critical(double confidence, std::size_t degreesOfFreedom)
{
    if (!(confidence > 0.0 && confidence < 1.0))
        throw InvalidArgument("confidence must lie in (0, 1)");
    if (degreesOfFreedom == 0)
        throw InvalidArgument("t quantile needs at least one degree of freedom");
    const boost::math::students_t dist(static_cast<double>(degreesOfFreedom));
    return boost::math::quantile(dist, 0.5 + confidence / 2.0);
}

MeanCi mean_confidence(std::span<const double> samples, double confidence)
{
    RunningStats acc;
    for (double x : samples)
        acc.add(x);
    return acc.confidence(confidence);
}

void RunningStats::add(double x)
{
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
}

void RunningStats::merge(const RunningStats& other)
{
    if (other.n_ == 0)
        return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double d = other.mean_ - mean_;
    const double n = na + nb;
    mean_ += d * nb / n;
    m2_ += other.m2_ + d * d * na * nb / n;
    n_ += other.n_;
}

double RunningStats::variance() const
{
    return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

MeanCi RunningStats::confidence(double level) const
{
    MeanCi ci{mean_, 0.0, n_};
    if (n_ >= 2)
        ci.halfWidth = t_critical(level, n_ - 1) * std::sqrt(variance() / static_cast<double>(n_));
    return ci;
}

} // namespace aloha_noma
