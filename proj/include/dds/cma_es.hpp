#ifndef DDS_CMA_ES_HPP
#define DDS_CMA_ES_HPP

#include <dds/common.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace dds {

    /// Optional overrides for the strategy constants. Unset fields take the
    /// usual defaults derived from the dimension and the batch size.
    struct CmaEsConstants {
        std::optional<double> c_sigma;
        std::optional<double> d_sigma;
        std::optional<double> c_c;
        std::optional<double> c_1;
        std::optional<double> c_mu;
    };

    /// Thresholds of the basic restart rule.
    struct RestartThresholds {
        double min_scale = 1e-32; // on sigma^2 * max diag(C)
        double max_condition = 1e14;
    };

    /// CMA-ES with mu/mu_w recombination over the top floor(lambda/2) ranks,
    /// driven through ask()/tell() by an external ranking.
    class CmaEs {
    public:
        CmaEs(const SolutionVector& initial_mean, double initial_step, std::size_t batch_size,
            const CmaEsConstants& overrides = {}, RestartThresholds restart = {})
            : CmaEs(initial_mean, initial_step, Matrix::Identity(initial_mean.size(), initial_mean.size()), batch_size, overrides, restart)
        {
        }

        /// Starts from an arbitrary symmetric covariance (sigma excluded).
        CmaEs(const SolutionVector& initial_mean, double initial_step, const Matrix& initial_covariance, std::size_t batch_size,
            const CmaEsConstants& overrides = {}, RestartThresholds restart = {})
            : _mean(initial_mean), _sigma(initial_step), _cov(initial_covariance), _lambda(batch_size), _restart(restart)
        {
            if (!(initial_step > 0.) || !std::isfinite(initial_step))
                throw InvalidArgument("CmaEs: initial step size must be positive");
            if (batch_size < 2)
                throw InvalidArgument("CmaEs: batch size must be at least 2");
            if (initial_mean.size() == 0)
                throw InvalidArgument("CmaEs: empty initial mean");
            if (_cov.rows() != _mean.size() || _cov.cols() != _mean.size())
                throw InvalidArgument("CmaEs: covariance shape does not match the mean");

            const double n = static_cast<double>(_mean.size());
            _mu = _lambda / 2;
            _weights.resize(static_cast<Eigen::Index>(_mu));
            for (std::size_t i = 0; i < _mu; ++i)
                _weights(static_cast<Eigen::Index>(i)) = std::log((static_cast<double>(_lambda) + 1.) / 2.) - std::log(static_cast<double>(i + 1));
            _weights /= _weights.sum();
            _mu_eff = 1. / _weights.squaredNorm();

            _c_sigma = overrides.c_sigma.value_or((_mu_eff + 2.) / (n + _mu_eff + 5.));
            _d_sigma = overrides.d_sigma.value_or(1. + 2. * std::max(0., std::sqrt((_mu_eff - 1.) / (n + 1.)) - 1.) + _c_sigma);
            _c_c = overrides.c_c.value_or((4. + _mu_eff / n) / (n + 4. + 2. * _mu_eff / n));
            _c_1 = overrides.c_1.value_or(2. / ((n + 1.3) * (n + 1.3) + _mu_eff));
            _c_mu = overrides.c_mu.value_or(std::min(1. - _c_1, 2. * (_mu_eff - 2. + 1. / _mu_eff) / ((n + 2.) * (n + 2.) + _mu_eff)));
            _chi_n = std::sqrt(n) * (1. - 1. / (4. * n) + 1. / (21. * n * n));
            _eigen_gap = static_cast<std::size_t>(std::max(1., std::ceil(1. / (10. * n * (_c_1 + _c_mu)))));

            _p_sigma = Vector::Zero(_mean.size());
            _p_c = Vector::Zero(_mean.size());
            _update_eigensystem();
        }

        /// Draws batch_size independent samples from N(mean, sigma^2 C).
        std::vector<SolutionVector> ask(Rng& rng) const
        {
            if (_degenerate)
                throw RestartRequired("CmaEs: covariance lost positive definiteness");
            std::normal_distribution<double> normal(0., 1.);
            std::vector<SolutionVector> out;
            out.reserve(_lambda);
            Vector z(_mean.size());
            for (std::size_t k = 0; k < _lambda; ++k) {
                for (Eigen::Index i = 0; i < z.size(); ++i)
                    z(i) = normal(rng);
                out.emplace_back(_mean + _sigma * (_basis * _axis_scale.cwiseProduct(z)));
            }
            return out;
        }

        /// `ranking[r]` is the index into `solutions` of the r-th best sample.
        void tell(std::span<const SolutionVector> solutions, std::span<const std::size_t> ranking)
        {
            if (solutions.size() != _lambda || ranking.size() != _lambda)
                throw InvalidArgument("CmaEs::tell: expected " + std::to_string(_lambda) + " solutions and ranks");
            std::vector<bool> seen(_lambda, false);
            for (std::size_t idx : ranking) {
                if (idx >= _lambda || seen[idx])
                    throw InvalidArgument("CmaEs::tell: ranking is not a permutation");
                seen[idx] = true;
            }

            const Eigen::Index n = _mean.size();
            Matrix steps(n, static_cast<Eigen::Index>(_mu));
            for (std::size_t r = 0; r < _mu; ++r) {
                const SolutionVector& x = solutions[ranking[r]];
                if (x.size() != n)
                    throw InvalidArgument("CmaEs::tell: solution dimension mismatch");
                steps.col(static_cast<Eigen::Index>(r)) = (x - _mean) / _sigma;
            }
            const Vector step_w = steps * _weights;
            _mean += _sigma * step_w;

            // C^{-1/2} from the (possibly stale) eigensystem.
            const Vector whitened = _basis * (_basis.transpose() * step_w).cwiseQuotient(_axis_scale);
            _p_sigma = (1. - _c_sigma) * _p_sigma + std::sqrt(_c_sigma * (2. - _c_sigma) * _mu_eff) * whitened;

            const double ps_norm = _p_sigma.norm();
            const double decay = 1. - std::pow(1. - _c_sigma, 2. * static_cast<double>(_generation + 1));
            const bool h_sigma = ps_norm / std::sqrt(decay) < (1.4 + 2. / (static_cast<double>(n) + 1.)) * _chi_n;

            _p_c = (1. - _c_c) * _p_c + (h_sigma ? std::sqrt(_c_c * (2. - _c_c) * _mu_eff) : 0.) * step_w;

            const double delta_h = h_sigma ? 0. : _c_c * (2. - _c_c);
            Matrix rank_mu = steps * _weights.asDiagonal() * steps.transpose();
            _cov = (1. - _c_1 - _c_mu + _c_1 * delta_h) * _cov + _c_1 * (_p_c * _p_c.transpose()) + _c_mu * rank_mu;
            _cov = 0.5 * (_cov + _cov.transpose()).eval();

            _sigma *= std::exp((_c_sigma / _d_sigma) * (ps_norm / _chi_n - 1.));

            ++_generation;
            if (_generation - _eigen_generation >= _eigen_gap)
                _update_eigensystem();
        }

        /// True when the distribution has numerically degenerated.
        bool check_restart() const
        {
            if (_degenerate || !std::isfinite(_sigma) || !_mean.allFinite())
                return true;
            if (_sigma * _sigma * _cov.diagonal().maxCoeff() < _restart.min_scale)
                return true;
            if (condition_number() > _restart.max_condition)
                return true;
            // A tenth of a standard deviation along any principal axis no
            // longer moves the mean.
            for (Eigen::Index i = 0; i < _mean.size(); ++i) {
                const Vector shifted = _mean + 0.1 * _sigma * _axis_scale(i) * _basis.col(i);
                if (shifted == _mean)
                    return true;
            }
            return false;
        }

        double condition_number() const
        {
            const double lo = _eigenvalues.minCoeff();
            if (!(lo > 0.))
                return std::numeric_limits<double>::infinity();
            return _eigenvalues.maxCoeff() / lo;
        }

        const SolutionVector& mean() const { return _mean; }
        double step_size() const { return _sigma; }
        const Matrix& covariance() const { return _cov; }
        const Vector& path_sigma() const { return _p_sigma; }
        const Vector& path_c() const { return _p_c; }
        const Vector& weights() const { return _weights; }
        std::size_t generation() const { return _generation; }
        std::size_t batch_size() const { return _lambda; }
        std::size_t parents() const { return _mu; }
        Eigen::Index dim() const { return _mean.size(); }
        double mu_eff() const { return _mu_eff; }
        double c_sigma() const { return _c_sigma; }
        double d_sigma() const { return _d_sigma; }
        double c_c() const { return _c_c; }
        double c_1() const { return _c_1; }
        double c_mu() const { return _c_mu; }
        std::size_t eigen_gap() const { return _eigen_gap; }

    protected:
        void _update_eigensystem()
        {
            _eigen_generation = _generation;
            if (!_cov.allFinite()) {
                _degenerate = true;
                return;
            }
            Eigen::SelfAdjointEigenSolver<Matrix> solver(_cov);
            if (solver.info() != Eigen::Success) {
                _degenerate = true;
                return;
            }
            _eigenvalues = solver.eigenvalues();
            if (!(_eigenvalues.minCoeff() > 0.)) {
                _degenerate = true;
                return;
            }
            _basis = solver.eigenvectors();
            _axis_scale = _eigenvalues.cwiseSqrt();
        }

        SolutionVector _mean;
        double _sigma;
        Matrix _cov;
        std::size_t _lambda;
        RestartThresholds _restart;

        std::size_t _mu = 0;
        Vector _weights;
        double _mu_eff = 0.;
        double _c_sigma = 0., _d_sigma = 0., _c_c = 0., _c_1 = 0., _c_mu = 0., _chi_n = 0.;

        Vector _p_sigma, _p_c;
        Matrix _basis;
        Vector _axis_scale;
        Vector _eigenvalues;
        std::size_t _eigen_gap = 1;
        std::size_t _eigen_generation = 0;
        std::size_t _generation = 0;
        bool _degenerate = false;
    };

} // namespace dds

#endif
