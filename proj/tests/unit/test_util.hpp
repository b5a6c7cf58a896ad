#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "foresee/random.hpp"
#include "foresee/tensor.hpp"

namespace foresee::testing {

inline DayTensor random_tensor(Rng& rng, TensorShape shape, double spread = 1.0)
{
    std::vector<double> v(shape.size());
    for (auto& x : v) {
        x = spread * rng.gaussian();
    }
    return DayTensor(shape, std::move(v));
}

inline DayTensor column(std::vector<double> values)
{
    const auto n = values.size();
    return DayTensor(TensorShape{n, 1, 1}, std::move(values));
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("foresee_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace foresee::testing
