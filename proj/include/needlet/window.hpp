#pragma once

// Cutoff functions eta: [0, inf) -> [0, 1] with eta = 1 on [0, 1] and
// supp eta in [0, 2]. They set the frequency profile of the needlet kernel.

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace needlet {

enum class WindowProfile { smooth_bump, linear_ramp, custom };

std::string_view to_string(WindowProfile p);
/// Accepts "smooth-bump" / "smooth_bump" and "linear-ramp" / "linear_ramp".
WindowProfile parse_window_profile(std::string_view name);

class AdmissibleWindow {
public:
    AdmissibleWindow() : AdmissibleWindow(WindowProfile::smooth_bump) {}
    explicit AdmissibleWindow(WindowProfile profile);

    /// Arbitrary profile, for tests of the validator. Not cached, not assumed smooth.
    static AdmissibleWindow from_function(std::string name, std::function<double(double)> fn);

    double operator()(double t) const;

    WindowProfile profile() const { return profile_; }
    const std::string& name() const { return name_; }
    /// Whether the profile is C^infinity by construction.
    bool declared_smooth() const { return profile_ == WindowProfile::smooth_bump; }

private:
    WindowProfile profile_;
    std::string name_;
    std::function<double(double)> custom_;
};

AdmissibleWindow make_window(WindowProfile profile);

struct WindowViolation {
    double t;
    double value;
    std::string condition;
};

struct WindowReport {
    std::vector<WindowViolation> violations;
    /// Raised when the profile is not C^infinity: either not declared smooth, or
    /// a one-sided finite-difference derivative fails to vanish at t = 1 or t = 2.
    bool smoothness_flag = false;
    double max_edge_derivative = 0.0;
    bool ok() const { return violations.empty() && !smoothness_flag; }
};

/// Checks eta = 1 on [0,1], 0 <= eta <= 1 on [1,2], eta = 0 on [2, 3] at
/// grid_size points per unit interval. grid_size >= 100.
WindowReport validate_window(const AdmissibleWindow& w, int grid_size);

}  // namespace needlet
