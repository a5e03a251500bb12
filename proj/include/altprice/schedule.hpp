#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <utility>
#include <vector>

namespace altprice
{

// A piecewise-constant function of time. Each segment's value applies on
// [t_start, next t_start); the last segment extends to +infinity and the
// first one is extended back to -infinity.
class Schedule
{
public:
    struct Segment
    {
        double t_start;
        double value;
    };

    Schedule() : segments_{{0.0, 0.0}} {}

    // Implicit on purpose: a plain number is the common case.
    Schedule(double constant) : segments_{{0.0, constant}} {}

    explicit Schedule(std::vector<Segment> segments) : segments_(std::move(segments))
    {
        if (segments_.empty())
            throw std::invalid_argument("schedule needs at least one segment");
        for (std::size_t i = 1; i < segments_.size(); ++i) {
            if (!(segments_[i].t_start > segments_[i - 1].t_start))
                throw std::invalid_argument("schedule segments must have increasing t_start");
        }
        for (const auto &s : segments_) {
            if (!std::isfinite(s.value) || !std::isfinite(s.t_start))
                throw std::invalid_argument("schedule values must be finite");
        }
    }

    Schedule(std::initializer_list<Segment> segments)
        : Schedule(std::vector<Segment>(segments)) {}

    const std::vector<Segment> &segments() const noexcept { return segments_; }

    bool is_constant() const noexcept
    {
        return std::all_of(segments_.begin(), segments_.end(),
                           [&](const Segment &s) { return s.value == segments_.front().value; });
    }

    double value_at(double t) const noexcept
    {
        auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                   [](double x, const Segment &s) { return x < s.t_start; });
        if (it == segments_.begin())
            return segments_.front().value;
        return std::prev(it)->value;
    }

    // Exact integral of fn(value(u)) over [a, b].
    template <class Fn>
    double integrate(double a, double b, Fn &&fn) const
    {
        if (b < a)
            return -integrate(b, a, fn);
        double total = 0.0;
        double lo = a;
        for (double cut : breakpoints(a, b)) {
            total += fn(value_at(lo)) * (cut - lo);
            lo = cut;
        }
        total += fn(value_at(lo)) * (b - lo);
        return total;
    }

    double integrate(double a, double b) const
    {
        return integrate(a, b, [](double v) { return v; });
    }

    // Segment starts strictly inside (a, b).
    std::vector<double> breakpoints(double a, double b) const
    {
        std::vector<double> out;
        for (const auto &s : segments_) {
            if (s.t_start > a && s.t_start < b)
                out.push_back(s.t_start);
        }
        return out;
    }

    template <class Fn>
    bool all_of(Fn &&pred) const
    {
        return std::all_of(segments_.begin(), segments_.end(),
                           [&](const Segment &s) { return pred(s.value); });
    }

private:
    std::vector<Segment> segments_;
};

// Union of the breakpoints of several schedules inside (a, b), sorted, unique.
inline std::vector<double> merged_breakpoints(double a, double b,
                                              std::initializer_list<const Schedule *> schedules)
{
    std::vector<double> cuts;
    for (const Schedule *s : schedules) {
        auto bp = s->breakpoints(a, b);
        cuts.insert(cuts.end(), bp.begin(), bp.end());
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    return cuts;
}

} // namespace altprice
