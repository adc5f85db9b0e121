#pragma once

#include <cstddef>
#include <span>

namespace aloha_noma {

struct MeanCi
{
    double mean = 0.0;
    double halfWidth = 0.0; // two-sided, at the requested confidence
    std::size_t samples = 0;
};

// Student-t quantile for the two-sided interval of the given confidence level.
double t_critical(double confidence, std::size_t degreesOfFreedom);

// Sample mean with a t-based confidence half-width. Fewer than two samples
// give a zero half-width.
MeanCi mean_confidence(std::span<const double> samples, double confidence = 0.95);

// Running mean/variance (Welford). Merging is associative up to rounding.
class RunningStats
{
  public:
    void add(double x);
    void merge(const RunningStats& other);

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const; // unbiased
    MeanCi confidence(double level = 0.95) const;

  private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

} // namespace aloha_noma
