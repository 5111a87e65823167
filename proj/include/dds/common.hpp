#ifndef DDS_COMMON_HPP
#define DDS_COMMON_HPP

#include <Eigen/Core>

#include <charconv>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <system_error>

namespace dds {

    using Vector = Eigen::VectorXd;
    using Matrix = Eigen::MatrixXd;

    /// Point in the search space.
    using SolutionVector = Vector;
    /// Point in the feature (behavior) space.
    using FeatureVector = Vector;

    using Rng = std::mt19937_64;

    struct Error : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    struct InvalidArgument : Error {
        using Error::Error;
    };

    struct InvalidConfig : Error {
        using Error::Error;
    };

    struct InvalidFeature : Error {
        using Error::Error;
    };

    struct EmptyEstimator : Error {
        using Error::Error;
    };

    struct UndefinedMetric : Error {
        using Error::Error;
    };

    struct UnsupportedExport : Error {
        using Error::Error;
    };

    /// Raised by an optimizer whose covariance can no longer be factorized.
    struct RestartRequired : Error {
        using Error::Error;
    };

    /// Derives an independent stream from a base seed and a stream tag.
    inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
            static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
        return Rng(seq);
    }

    /// Shortest representation that round-trips to the same double.
    inline std::string format_double(double value)
    {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
        if (ec != std::errc())
            throw Error("format_double: conversion failed");
        return std::string(buf, ptr);
    }

} // namespace dds

#endif
