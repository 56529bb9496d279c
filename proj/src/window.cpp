#include "needlet/window.hpp"

#include "needlet/special_functions.hpp"

#include <algorithm>
#include <cmath>

namespace needlet {

namespace {

double bump_h(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

double smooth_bump(double t) {
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    const double a = bump_h(2.0 - t);
    const double b = bump_h(t - 1.0);
    return a / (a + b);
}

double linear_ramp(double t) {
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    return 2.0 - t;
}

}  // namespace

std::string_view to_string(WindowProfile p) {
    switch (p) {
        case WindowProfile::smooth_bump: return "smooth-bump";
        case WindowProfile::linear_ramp: return "linear-ramp";
        case WindowProfile::custom: return "custom";
    }
    return "unknown";
}

WindowProfile parse_window_profile(std::string_view name) {
    if (name == "smooth-bump" || name == "smooth_bump") return WindowProfile::smooth_bump;
    if (name == "linear-ramp" || name == "linear_ramp") return WindowProfile::linear_ramp;
    throw PreconditionError("unknown window profile: " + std::string(name));
}

AdmissibleWindow::AdmissibleWindow(WindowProfile profile) : profile_(profile), name_(to_string(profile)) {
    if (profile == WindowProfile::custom) {
        throw PreconditionError("custom windows are built with AdmissibleWindow::from_function");
    }
}

AdmissibleWindow AdmissibleWindow::from_function(std::string name, std::function<double(double)> fn) {
    AdmissibleWindow w(WindowProfile::smooth_bump);
    w.profile_ = WindowProfile::custom;
    w.name_ = std::move(name);
    w.custom_ = std::move(fn);
    return w;
}

double AdmissibleWindow::operator()(double t) const {
    if (t < 0.0) throw DomainError("window argument must be non-negative");
    switch (profile_) {
        case WindowProfile::smooth_bump: return smooth_bump(t);
        case WindowProfile::linear_ramp: return linear_ramp(t);
        case WindowProfile::custom: return custom_(t);
    }
    return 0.0;
}

AdmissibleWindow make_window(WindowProfile profile) { return AdmissibleWindow(profile); }

WindowReport validate_window(const AdmissibleWindow& w, int grid_size) {
    if (grid_size < 100) throw PreconditionError("validate_window needs grid_size >= 100");
    WindowReport report;
    const double step = 1.0 / grid_size;
    for (int i = 0; i <= 3 * grid_size; ++i) {
        const double t = i * step;
        const double v = w(t);
        if (t <= 1.0 && v != 1.0) {
            report.violations.push_back({t, v, "eta = 1 on [0,1]"});
        } else if (t > 1.0 && t < 2.0 && (v < 0.0 || v > 1.0)) {
            report.violations.push_back({t, v, "0 <= eta <= 1 on [1,2]"});
        } else if (t >= 2.0 && v != 0.0) {
            report.violations.push_back({t, v, "supp eta in [0,2]"});
        }
    }

    // One-sided first differences at the junctions. For a C^inf profile glued
    // to constants every derivative vanishes there.
    const double h = 1e-3;
    const double d1 = std::abs(w(1.0 + h) - w(1.0)) / h;
    const double d2 = std::abs(w(2.0) - w(2.0 - h)) / h;
    report.max_edge_derivative = std::max(d1, d2);
    report.smoothness_flag = !w.declared_smooth() || report.max_edge_derivative > 1e-4;
    return report;
}

}  // namespace needlet
