#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ota/core.hpp"

namespace ota {

/// One piece of a piecewise threshold on [w_start, w_end).
/// Flat:  phi(w) = level
/// Exp:   phi(w) = L + base * exp(rate * (w - anchor))
struct ThresholdSegment {
    enum class Shape { Flat, Exp };

    Shape shape;
    double w_start;
    double w_end;
    double level = 0.0;   // Flat
    double base = 0.0;    // Exp
    double rate = 0.0;    // Exp
    double anchor = 0.0;  // Exp

    static ThresholdSegment flat(double w_start, double w_end, double level) {
        ThresholdSegment s;
        s.shape = Shape::Flat;
        s.w_start = w_start;
        s.w_end = w_end;
        s.level = level;
        return s;
    }

    static ThresholdSegment exp_piece(double w_start, double w_end, double base,
                                      double rate, double anchor) {
        ThresholdSegment s;
        s.shape = Shape::Exp;
        s.w_start = w_start;
        s.w_end = w_end;
        s.base = base;
        s.rate = rate;
        s.anchor = anchor;
        return s;
    }

    double value_at(double w, double lower) const {
        if (shape == Shape::Flat) return level;
        return lower + base * std::exp(rate * (w - anchor));
    }

    bool is_constant() const { return shape == Shape::Flat || base == 0.0; }
};

/// Right-continuous non-decreasing threshold phi: [0,1] -> [L,U],
/// stored as abutting segments tiling [0,1].
class PiecewiseThreshold {
public:
    PiecewiseThreshold(std::vector<ThresholdSegment> segments, PriceBounds bounds)
        : segments_(std::move(segments)), bounds_(bounds) {
        drop_absorbed();
        validate();
    }

    const std::vector<ThresholdSegment>& segments() const { return segments_; }
    const PriceBounds& bounds() const { return bounds_; }

    /// Right-continuous evaluation; at w = 1 the last segment's value at 1.
    double eval(double w) const {
        if (w < 0.0 || w > 1.0) throw DomainError("threshold_eval: w outside [0,1]");
        const ThresholdSegment& s = segment_at(w);
        return s.value_at(w, bounds_.lower());
    }

    /// Closed-form integral of phi over [a, b].
    double integrate(double a, double b) const {
        if (a > b) throw DomainError("threshold_integral: a > b");
        if (a < 0.0 || b > 1.0) throw DomainError("threshold_integral: range outside [0,1]");
        double total = 0.0;
        for (const ThresholdSegment& s : segments_) {
            double lo = std::max(a, s.w_start);
            double hi = std::min(b, s.w_end);
            if (hi <= lo) continue;
            if (s.shape == ThresholdSegment::Shape::Flat) {
                total += s.level * (hi - lo);
            } else {
                total += bounds_.lower() * (hi - lo) +
                         (s.base / s.rate) * (std::exp(s.rate * (hi - s.anchor)) -
                                              std::exp(s.rate * (lo - s.anchor)));
            }
        }
        return total;
    }

    /// sup{u in [0,1] : phi(u) <= v}; 0 when v < phi(0), 1 when v >= phi(1-).
    /// On a flat segment at exactly v, returns the segment's right endpoint
    /// (maximal-conversion tie-break).
    double pseudo_inverse(double v) const {
        if (!bounds_.contains(v)) throw DomainError("pseudo_inverse: v outside [L,U]");
        double ans = 0.0;
        for (const ThresholdSegment& s : segments_) {
            double start_val = s.value_at(s.w_start, bounds_.lower());
            if (start_val > v) break;
            if (s.is_constant()) {
                ans = s.w_end;
                continue;
            }
            double end_val = s.value_at(s.w_end, bounds_.lower());
            if (end_val <= v) {
                ans = s.w_end;
                continue;
            }
            double u = s.anchor + std::log((v - bounds_.lower()) / s.base) / s.rate;
            ans = std::clamp(u, s.w_start, s.w_end);
            break;
        }
        return std::min(ans, 1.0);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["bounds"] = {{"lower", bounds_.lower()}, {"upper", bounds_.upper()}};
        nlohmann::json segs = nlohmann::json::array();
        for (const ThresholdSegment& s : segments_) {
            nlohmann::json e;
            e["w_start"] = s.w_start;
            e["w_end"] = s.w_end;
            if (s.shape == ThresholdSegment::Shape::Flat) {
                e["shape"] = "flat";
                e["level"] = s.level;
            } else {
                e["shape"] = "exp";
                e["base"] = s.base;
                e["rate"] = s.rate;
                e["anchor"] = s.anchor;
            }
            segs.push_back(e);
        }
        j["segments"] = segs;
        return j;
    }

private:
    static constexpr double kTol = 1e-9;

    void drop_absorbed() {
        std::vector<ThresholdSegment> kept;
        for (const ThresholdSegment& s : segments_) {
            if (s.w_end - s.w_start > kTol) kept.push_back(s);
        }
        segments_ = std::move(kept);
    }

    void validate() const {
        if (segments_.empty()) throw DomainError("threshold: no segments");
        double tol = kTol * std::max(1.0, bounds_.upper());
        if (std::abs(segments_.front().w_start) > kTol ||
            std::abs(segments_.back().w_end - 1.0) > kTol)
            throw DomainError("threshold: segments must tile [0,1]");
        for (std::size_t i = 0; i + 1 < segments_.size(); ++i) {
            if (std::abs(segments_[i].w_end - segments_[i + 1].w_start) > kTol)
                throw DomainError("threshold: segments must abut");
        }
        double prev = bounds_.lower() - tol;
        for (const ThresholdSegment& s : segments_) {
            if (s.shape == ThresholdSegment::Shape::Exp && !(s.rate > 0.0))
                throw DomainError("threshold: exp segment needs rate > 0");
            if (s.shape == ThresholdSegment::Shape::Exp && s.base < 0.0)
                throw DomainError("threshold: exp segment needs base >= 0");
            double lo = s.value_at(s.w_start, bounds_.lower());
            double hi = s.value_at(s.w_end, bounds_.lower());
            if (lo < prev - tol)
                throw DomainError("threshold: segments must be non-decreasing");
            if (lo < bounds_.lower() - tol || hi > bounds_.upper() + tol)
                throw DomainError("threshold: values must stay within [L,U]");
            prev = hi;
        }
    }

    const ThresholdSegment& segment_at(double w) const {
        if (w >= segments_.back().w_start) return segments_.back();
        for (const ThresholdSegment& s : segments_) {
            if (w < s.w_end) return s;
        }
        return segments_.back();
    }

    std::vector<ThresholdSegment> segments_;
    PriceBounds bounds_;
};

inline double threshold_eval(const PiecewiseThreshold& phi, double w) { return phi.eval(w); }

inline double threshold_integral(const PiecewiseThreshold& phi, double a, double b) {
    return phi.integrate(a, b);
}

inline double threshold_pseudo_inverse(const PiecewiseThreshold& phi, double v) {
    return phi.pseudo_inverse(v);
}

}  // namespace ota
