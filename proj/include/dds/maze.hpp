#ifndef DDS_MAZE_HPP
#define DDS_MAZE_HPP

#include <dds/common.hpp>
#include <dds/domains.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace dds {

    struct Point2 {
        double x = 0., y = 0.;
    };

    struct Segment {
        Point2 a, b;
    };

    struct MazeSimulation {
        int steps = 250;
        double dt = 0.05;
        /// Wheel speed at full actuation, in units per unit time.
        double max_wheel_speed = 0.5;
        double robot_radius = 0.015;
        double sensor_range = 0.2;
        std::array<double, 3> sensor_angles{-std::numbers::pi / 4., 0., std::numbers::pi / 4.};
    };

    /// Walls in the unit square, a start pose and a goal (kept for rendering).
    struct MazeWorld {
        std::vector<Segment> walls;
        Point2 start{0.5, 0.5};
        double start_heading = 0.;
        Point2 goal{0.5, 0.5};
        MazeSimulation sim;
    };

    namespace detail {
        inline double point_segment_distance(Point2 p, const Segment& s)
        {
            const double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
            const double len2 = dx * dx + dy * dy;
            double t = 0.;
            if (len2 > 0.)
                t = std::clamp(((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / len2, 0., 1.);
            const double cx = s.a.x + t * dx - p.x, cy = s.a.y + t * dy - p.y;
            return std::sqrt(cx * cx + cy * cy);
        }

        /// Distance along the ray to the segment, or +inf when it misses.
        inline double ray_segment_distance(Point2 origin, double angle, const Segment& s)
        {
            const double rx = std::cos(angle), ry = std::sin(angle);
            const double sx = s.b.x - s.a.x, sy = s.b.y - s.a.y;
            const double denom = rx * sy - ry * sx;
            if (std::abs(denom) < 1e-15)
                return std::numeric_limits<double>::infinity();
            const double qx = s.a.x - origin.x, qy = s.a.y - origin.y;
            const double t = (qx * sy - qy * sx) / denom;
            const double u = (qx * ry - qy * rx) / denom;
            if (t < 0. || u < 0. || u > 1.)
                return std::numeric_limits<double>::infinity();
            return t;
        }

        inline double clearance(Point2 p, const std::vector<Segment>& walls)
        {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& w : walls)
                best = std::min(best, point_segment_distance(p, w));
            return best;
        }

        inline double cast(Point2 p, double angle, double range, const std::vector<Segment>& walls)
        {
            double best = range;
            for (const auto& w : walls)
                best = std::min(best, ray_segment_distance(p, angle, w));
            return best;
        }

        inline bool in_unit_square(Point2 p)
        {
            return p.x >= 0. && p.x <= 1. && p.y >= 0. && p.y <= 1.;
        }
    } // namespace detail

    inline void validate(const MazeWorld& world)
    {
        for (const auto& w : world.walls)
            if (!detail::in_unit_square(w.a) || !detail::in_unit_square(w.b))
                throw InvalidConfig("maze: wall outside the unit square");
        if (!detail::in_unit_square(world.start))
            throw InvalidConfig("maze: start outside the unit square");
        if (detail::clearance(world.start, world.walls) < world.sim.robot_radius)
            throw InvalidConfig("maze: start position intersects a wall");
        const auto& s = world.sim;
        if (s.steps <= 0 || !(s.dt > 0.) || !(s.max_wheel_speed >= 0.) || !(s.robot_radius > 0.) || !(s.sensor_range > 0.))
            throw InvalidConfig("maze: invalid simulation constants");
    }

    /// Built-in deceptive layout; identical to data/deceptive_maze.txt.
    inline MazeWorld deceptive_maze()
    {
        MazeWorld world;
        const auto seg = [&](double x1, double y1, double x2, double y2) { world.walls.push_back({{x1, y1}, {x2, y2}}); };
        seg(0, 0, 1, 0);
        seg(1, 0, 1, 1);
        seg(1, 1, 0, 1);
        seg(0, 1, 0, 0);
        seg(0.25, 0.25, 0.25, 0.75);
        seg(0.14, 0.45, 0, 0.65);
        seg(0.25, 0.75, 0, 0.8);
        seg(0.25, 0.75, 0.66, 0.875);
        seg(0.355, 0, 0.525, 0.185);
        seg(0.25, 0.5, 0.75, 0.215);
        seg(1, 0.25, 0.435, 0.55);
        world.start = {0.15, 0.15};
        world.start_heading = std::numbers::pi / 2.;
        world.goal = {0.15, 0.9};
        return world;
    }

    /// Lines `x1 y1 x2 y2`, `start x y heading`, `goal x y`; `#` comments.
    inline MazeWorld parse_maze(std::istream& in, const std::string& origin = "maze")
    {
        MazeWorld world;
        bool have_start = false;
        std::string line;
        int number = 0;
        while (std::getline(in, line)) {
            ++number;
            if (const auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            std::istringstream fields(line);
            std::string head;
            if (!(fields >> head))
                continue;
            const auto fail = [&] { throw InvalidConfig(origin + ":" + std::to_string(number) + ": malformed record"); };
            const auto finish = [&] {
                std::string extra;
                if (fields >> extra)
                    fail();
            };
            if (head == "start") {
                if (!(fields >> world.start.x >> world.start.y >> world.start_heading))
                    fail();
                finish();
                have_start = true;
            }
            else if (head == "goal") {
                if (!(fields >> world.goal.x >> world.goal.y))
                    fail();
                finish();
            }
            else {
                Segment s;
                std::istringstream record(line);
                if (!(record >> s.a.x >> s.a.y >> s.b.x >> s.b.y))
                    fail();
                std::string extra;
                if (record >> extra)
                    fail();
                world.walls.push_back(s);
            }
        }
        if (!have_start)
            throw InvalidConfig(origin + ": missing start record");
        validate(world);
        return world;
    }

    inline MazeWorld load_maze(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
            throw InvalidConfig("cannot open maze file " + path.string());
        return parse_maze(in, path.string());
    }

    inline constexpr Eigen::Index maze_inputs = 5;
    inline constexpr Eigen::Index maze_hidden = 8;
    inline constexpr Eigen::Index maze_outputs = 2;
    inline constexpr Eigen::Index maze_parameters = (maze_inputs + 1) * maze_hidden + (maze_hidden + 1) * maze_outputs;

    /// 5-8-2 tanh network. Parameter layout: input weights (hidden-major),
    /// hidden biases, output weights (output-major), output biases.
    inline std::array<double, 2> maze_controller(const SolutionVector& w, const std::array<double, 5>& input)
    {
        std::array<double, maze_hidden> hidden{};
        const Eigen::Index hidden_bias = maze_inputs * maze_hidden;
        for (Eigen::Index h = 0; h < maze_hidden; ++h) {
            double acc = w(hidden_bias + h);
            for (Eigen::Index i = 0; i < maze_inputs; ++i)
                acc += w(h * maze_inputs + i) * input[static_cast<std::size_t>(i)];
            hidden[static_cast<std::size_t>(h)] = std::tanh(acc);
        }
        const Eigen::Index out_weights = hidden_bias + maze_hidden;
        const Eigen::Index out_bias = out_weights + maze_outputs * maze_hidden;
        std::array<double, 2> out{};
        for (Eigen::Index o = 0; o < maze_outputs; ++o) {
            double acc = w(out_bias + o);
            for (Eigen::Index h = 0; h < maze_hidden; ++h)
                acc += w(out_weights + o * maze_hidden + h) * hidden[static_cast<std::size_t>(h)];
            out[static_cast<std::size_t>(o)] = std::tanh(acc);
        }
        return out;
    }

    struct MazeTrace {
        std::vector<Point2> positions; // includes the start
    };

    namespace detail {
        // Moves the robot by (dx, dy) in sub-steps no longer than half its
        // radius. A blocked sub-step slides along whichever axis is free.
        inline Point2 move(Point2 p, double dx, double dy, const MazeWorld& world)
        {
            const double r = world.sim.robot_radius;
            const double length = std::hypot(dx, dy);
            const int pieces = std::max(1, static_cast<int>(std::ceil(length / (0.5 * r))));
            const double sx = dx / pieces, sy = dy / pieces;
            for (int i = 0; i < pieces; ++i) {
                const Point2 both{p.x + sx, p.y + sy};
                if (clearance(both, world.walls) >= r) {
                    p = both;
                    continue;
                }
                const Point2 horizontal{p.x + sx, p.y};
                if (sx != 0. && clearance(horizontal, world.walls) >= r) {
                    p = horizontal;
                    continue;
                }
                const Point2 vertical{p.x, p.y + sy};
                if (sy != 0. && clearance(vertical, world.walls) >= r)
                    p = vertical;
            }
            return p;
        }
    } // namespace detail

    /// Runs the controller and returns the final position clamped to the unit square.
    inline Point2 simulate_maze(const SolutionVector& weights, const MazeWorld& world, MazeTrace* trace = nullptr)
    {
        if (weights.size() != maze_parameters)
            throw InvalidConfig("maze: expected " + std::to_string(maze_parameters) + " controller weights, got " + std::to_string(weights.size()));
        const auto& sim = world.sim;
        Point2 p = world.start;
        double heading = world.start_heading;
        const double axle = 2. * sim.robot_radius;
        if (trace) {
            trace->positions.clear();
            trace->positions.push_back(p);
        }
        for (int step = 0; step < sim.steps; ++step) {
            std::array<double, 5> input{};
            for (std::size_t s = 0; s < 3; ++s)
                input[s] = detail::cast(p, heading + sim.sensor_angles[s], sim.sensor_range, world.walls) / sim.sensor_range;
            const double bump_range = 2. * sim.robot_radius;
            input[3] = detail::cast(p, heading - std::numbers::pi / 2., bump_range, world.walls) < bump_range ? 1. : 0.;
            input[4] = detail::cast(p, heading + std::numbers::pi / 2., bump_range, world.walls) < bump_range ? 1. : 0.;

            const auto out = maze_controller(weights, input);
            const double left = out[0] * sim.max_wheel_speed;
            const double right = out[1] * sim.max_wheel_speed;
            const double speed = 0.5 * (left + right);
            heading += (right - left) / axle * sim.dt;
            const double distance = speed * sim.dt;
            if (distance != 0.)
                p = detail::move(p, distance * std::cos(heading), distance * std::sin(heading), world);
            if (trace)
                trace->positions.push_back(p);
        }
        return {std::clamp(p.x, 0., 1.), std::clamp(p.y, 0., 1.)};
    }

    inline FeatureVector maze_features(const SolutionVector& weights, const MazeWorld& world)
    {
        const Point2 p = simulate_maze(weights, world);
        FeatureVector out(2);
        out << p.x, p.y;
        return out;
    }

    class DeceptiveMaze : public Domain {
    public:
        explicit DeceptiveMaze(MazeWorld world = deceptive_maze()) : _world(std::move(world)) { validate(_world); }
        std::string_view name() const override { return "maze"; }
        Eigen::Index solution_dim() const override { return maze_parameters; }
        Eigen::Index feature_dim() const override { return 2; }
        Vector feature_lower() const override { return Vector::Zero(2); }
        Vector feature_upper() const override { return Vector::Ones(2); }
        FeatureVector evaluate(const SolutionVector& s) const override { return maze_features(s, _world); }
        double normalization_width() const override { return 1.; }
        const MazeWorld& world() const { return _world; }

    private:
        MazeWorld _world;
    };

} // namespace dds

#endif
