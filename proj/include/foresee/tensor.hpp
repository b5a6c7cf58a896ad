#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace foresee {

/// Dimensions of one day of demand data: (hour, region, channel).
struct TensorShape {
    std::size_t hours = 24;
    std::size_t regions = 1;
    std::size_t channels = 2;

    std::size_t size() const noexcept { return hours * regions * channels; }
    std::string str() const;

    /// Throws ShapeError unless every dimension is at least one.
    void validate() const;

    friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

/// Dense, row-major (hour, region, channel) tensor holding one day of values.
///
/// Every element is finite; constructors reject NaN and infinities so that no
/// public operation can hand a non-finite tensor to the rest of the pipeline.
class DayTensor {
public:
    DayTensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit DayTensor(TensorShape shape);

    DayTensor(TensorShape shape, std::vector<double> values);

    static DayTensor zeros(TensorShape shape) { return DayTensor(shape); }
    static DayTensor filled(TensorShape shape, double value);

    const TensorShape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }

    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double at(std::size_t hour, std::size_t region, std::size_t channel) const;

    std::size_t index(std::size_t hour, std::size_t region, std::size_t channel) const noexcept
    {
        return (hour * shape_.regions + region) * shape_.channels + channel;
    }

    friend bool operator==(const DayTensor&, const DayTensor&) = default;

private:
    TensorShape shape_{};
    std::vector<double> values_;
};

/// Throws ShapeError naming both shapes when they differ.
void require_same_shape(const DayTensor& a, const DayTensor& b, const char* context);

DayTensor elementwise_add(const DayTensor& a, const DayTensor& b);
DayTensor elementwise_sub(const DayTensor& a, const DayTensor& b);
DayTensor scale(const DayTensor& a, double c);

/// Returns a + c * b without materialising the scaled intermediate.
DayTensor axpy(const DayTensor& a, double c, const DayTensor& b);

/// How a squared-error tensor collapses to a scalar loss.
enum class LossReduction { kMean, kSum };

/// Mean of squared elementwise differences.
double squared_error(const DayTensor& a, const DayTensor& b);

/// Sum of squared elementwise differences (the squared Euclidean norm).
double sum_squared_error(const DayTensor& a, const DayTensor& b);

double reduced_loss(const DayTensor& a, const DayTensor& b, LossReduction reduction);

double squared_norm(const DayTensor& a);

struct MetricReport {
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t count = 0;
};

/// Running sums behind a MetricReport; merging two accumulators is equivalent
/// to evaluating the concatenated streams.
class MetricAccumulator {
public:
    void add(const DayTensor& prediction, const DayTensor& actual);
    void merge(const MetricAccumulator& other);

    std::size_t count() const noexcept { return count_; }
    MetricReport report() const;

private:
    double sum_abs_ = 0.0;
    double sum_sq_ = 0.0;
    std::size_t count_ = 0;
};

/// MAE and RMSE over every scalar entry of every day.
MetricReport evaluate(std::span<const DayTensor> predictions, std::span<const DayTensor> actuals);

} // namespace foresee
