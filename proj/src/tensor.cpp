#include "foresee/tensor.hpp"

#include <cmath>
#include <sstream>

#include "foresee/errors.hpp"

namespace foresee {

namespace {

void require_finite(std::span<const double> values)
{
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            std::ostringstream os;
            os << "non-finite tensor element at flat index " << i;
            throw Error(os.str());
        }
    }
}

} // namespace

std::string TensorShape::str() const
{
    std::ostringstream os;
    os << '(' << hours << ", " << regions << ", " << channels << ')';
    return os.str();
}

void TensorShape::validate() const
{
    if (hours == 0 || regions == 0 || channels == 0) {
        throw ShapeError("tensor shape " + str() + " has an empty dimension");
    }
}

DayTensor::DayTensor(TensorShape shape) : shape_(shape), values_(shape.size(), 0.0)
{
    shape_.validate();
}

DayTensor::DayTensor(TensorShape shape, std::vector<double> values) : shape_(shape), values_(std::move(values))
{
    shape_.validate();
    if (values_.size() != shape_.size()) {
        std::ostringstream os;
        os << "tensor of shape " << shape_.str() << " needs " << shape_.size() << " values, got " << values_.size();
        throw ShapeError(os.str());
    }
    require_finite(values_);
}

DayTensor DayTensor::filled(TensorShape shape, double value)
{
    return DayTensor(shape, std::vector<double>(shape.size(), value));
}

double DayTensor::at(std::size_t hour, std::size_t region, std::size_t channel) const
{
    if (hour >= shape_.hours || region >= shape_.regions || channel >= shape_.channels) {
        throw ShapeError("index out of range for tensor of shape " + shape_.str());
    }
    return values_[index(hour, region, channel)];
}

void require_same_shape(const DayTensor& a, const DayTensor& b, const char* context)
{
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(context) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    }
}

DayTensor elementwise_add(const DayTensor& a, const DayTensor& b)
{
    require_same_shape(a, b, "elementwise_add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] + b[i];
    }
    return DayTensor(a.shape(), std::move(out));
}

DayTensor elementwise_sub(const DayTensor& a, const DayTensor& b)
{
    require_same_shape(a, b, "elementwise_sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] - b[i];
    }
    return DayTensor(a.shape(), std::move(out));
}

DayTensor scale(const DayTensor& a, double c)
{
    if (!std::isfinite(c)) {
        throw ConfigError("scale: factor must be finite");
    }
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = c * a[i];
    }
    return DayTensor(a.shape(), std::move(out));
}

DayTensor axpy(const DayTensor& a, double c, const DayTensor& b)
{
    require_same_shape(a, b, "axpy");
    if (!std::isfinite(c)) {
        throw ConfigError("axpy: factor must be finite");
    }
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] + c * b[i];
    }
    return DayTensor(a.shape(), std::move(out));
}

double sum_squared_error(const DayTensor& a, const DayTensor& b)
{
    require_same_shape(a, b, "squared_error");
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

double squared_error(const DayTensor& a, const DayTensor& b)
{
    return sum_squared_error(a, b) / static_cast<double>(a.size());
}

double reduced_loss(const DayTensor& a, const DayTensor& b, LossReduction reduction)
{
    return reduction == LossReduction::kMean ? squared_error(a, b) : sum_squared_error(a, b);
}

double squared_norm(const DayTensor& a)
{
    double total = 0.0;
    for (double v : a.values()) {
        total += v * v;
    }
    return total;
}

void MetricAccumulator::add(const DayTensor& prediction, const DayTensor& actual)
{
    require_same_shape(prediction, actual, "evaluate");
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double d = prediction[i] - actual[i];
        sum_abs_ += std::abs(d);
        sum_sq_ += d * d;
    }
    count_ += prediction.size();
}

void MetricAccumulator::merge(const MetricAccumulator& other)
{
    sum_abs_ += other.sum_abs_;
    sum_sq_ += other.sum_sq_;
    count_ += other.count_;
}

MetricReport MetricAccumulator::report() const
{
    if (count_ == 0) {
        throw Error("evaluate: no entries to aggregate");
    }
    const auto n = static_cast<double>(count_);
    MetricReport r;
    r.mae = sum_abs_ / n;
    r.rmse = std::sqrt(sum_sq_ / n);
    // Rounding can leave rmse one ulp below mae when every |error| is equal.
    if (r.rmse < r.mae) {
        r.rmse = r.mae;
    }
    r.count = count_;
    return r;
}

MetricReport evaluate(std::span<const DayTensor> predictions, std::span<const DayTensor> actuals)
{
    if (predictions.empty() || actuals.empty()) {
        throw Error("evaluate: empty input");
    }
    if (predictions.size() != actuals.size()) {
        std::ostringstream os;
        os << "evaluate: " << predictions.size() << " predictions vs " << actuals.size() << " actuals";
        throw ShapeError(os.str());
    }
    MetricAccumulator acc;
    for (std::size_t day = 0; day < predictions.size(); ++day) {
        if (predictions[day].shape() != actuals[day].shape()) {
            std::ostringstream os;
            os << "evaluate: shape mismatch at day " << day << ": " << predictions[day].shape().str() << " vs "
               << actuals[day].shape().str();
            throw ShapeError(os.str());
        }
        acc.add(predictions[day], actuals[day]);
    }
    return acc.report();
}

} // namespace foresee
