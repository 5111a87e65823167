#ifndef DDS_DOMAINS_HPP
#define DDS_DOMAINS_HPP

#include <dds/common.hpp>

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

namespace dds {

    /// A benchmark feature function phi: R^n -> R^m with a constant objective.
    class Domain {
    public:
        virtual ~Domain() = default;
        virtual std::string_view name() const = 0;
        virtual Eigen::Index solution_dim() const = 0;
        virtual Eigen::Index feature_dim() const = 0;
        virtual Vector feature_lower() const = 0;
        virtual Vector feature_upper() const = 0;
        virtual FeatureVector evaluate(const SolutionVector& solution) const = 0;
        /// Width used to express a bandwidth as a fraction h0 = h / W.
        virtual double normalization_width() const = 0;
        virtual double objective(const SolutionVector&) const { return 1.; }
    };

    /// x if |x| <= 5.12, otherwise 5.12 / x.
    inline double clip(double x)
    {
        return std::abs(x) <= 5.12 ? x : 5.12 / x;
    }

    /// Sum of clip() over each of m contiguous blocks of the solution.
    inline FeatureVector multifeature_lp_features(const SolutionVector& solution, Eigen::Index m)
    {
        const Eigen::Index n = solution.size();
        if (m <= 0 || n % m != 0)
            throw InvalidConfig("multi-feature LP: solution dimension " + std::to_string(n) + " is not divisible by " + std::to_string(m));
        const Eigen::Index block = n / m;
        FeatureVector out = FeatureVector::Zero(m);
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index i = j * block; i < (j + 1) * block; ++i)
                out(j) += clip(solution(i));
        return out;
    }

    inline FeatureVector lp_features(const SolutionVector& solution)
    {
        if (solution.size() % 2 != 0)
            throw InvalidConfig("linear projection: solution dimension must be even");
        return multifeature_lp_features(solution, 2);
    }

    /// End-effector position of a planar arm with unit links.
    inline FeatureVector arm_features(const SolutionVector& angles)
    {
        double cumulative = 0., x = 0., y = 0.;
        for (Eigen::Index i = 0; i < angles.size(); ++i) {
            cumulative += angles(i);
            x += std::cos(cumulative);
            y += std::sin(cumulative);
        }
        FeatureVector out(2);
        out << x, y;
        return out;
    }

    class MultiFeatureLinearProjection : public Domain {
    public:
        MultiFeatureLinearProjection(Eigen::Index n, Eigen::Index m) : _n(n), _m(m)
        {
            if (n <= 0 || m <= 0 || n % m != 0)
                throw InvalidConfig("multi-feature LP: n must be a positive multiple of m");
        }
        std::string_view name() const override { return _m == 2 ? "lp" : "multi_lp"; }
        Eigen::Index solution_dim() const override { return _n; }
        Eigen::Index feature_dim() const override { return _m; }
        Vector feature_lower() const override { return Vector::Constant(_m, -_half_width()); }
        Vector feature_upper() const override { return Vector::Constant(_m, _half_width()); }
        FeatureVector evaluate(const SolutionVector& s) const override { return multifeature_lp_features(s, _m); }
        // Matches the published threshold and bandwidth tables: the full
        // side for LP, the half side for multi-feature LP.
        double normalization_width() const override { return _m == 2 ? 2. * _half_width() : _half_width(); }

    private:
        double _half_width() const { return 5.12 * static_cast<double>(_n) / static_cast<double>(_m); }
        Eigen::Index _n, _m;
    };

    class LinearProjection : public MultiFeatureLinearProjection {
    public:
        explicit LinearProjection(Eigen::Index n) : MultiFeatureLinearProjection(n, 2) {}
    };

    class ArmRepertoire : public Domain {
    public:
        explicit ArmRepertoire(Eigen::Index n) : _n(n)
        {
            if (n <= 0)
                throw InvalidConfig("arm: joint count must be positive");
        }
        std::string_view name() const override { return "arm"; }
        Eigen::Index solution_dim() const override { return _n; }
        Eigen::Index feature_dim() const override { return 2; }
        Vector feature_lower() const override { return Vector::Constant(2, -static_cast<double>(_n)); }
        Vector feature_upper() const override { return Vector::Constant(2, static_cast<double>(_n)); }
        FeatureVector evaluate(const SolutionVector& s) const override
        {
            if (s.size() != _n)
                throw InvalidArgument("arm: expected " + std::to_string(_n) + " joint angles");
            return arm_features(s);
        }
        double normalization_width() const override { return 2. * static_cast<double>(_n); }

    private:
        Eigen::Index _n;
    };

} // namespace dds

#endif
