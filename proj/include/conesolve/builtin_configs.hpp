#pragma once

#include <string_view>

namespace conesolve::builtin {

// Kept byte-identical to configs/system_disk.cfg and configs/scalar_disk.cfg;
// config_test checks the files against these strings.

inline constexpr std::string_view kSystemDisk = R"cfg(# Two coupled equations on the unit disk, Dirichlet data:
#   -Delta u1 = lambda1 * (sqrt(m) + tan(m)),   -Delta u2 = lambda2 * m^2,   m = max(u1, u2)
domain = disk
h = 1/64
bc = dirichlet
n = 2
f1 = "sqrt(max(u1,u2)) + tan(max(u1,u2))"
f2 = "max(u1,u2)^2"
rho = 15*pi/64
lambda1 = 1.6
lambda2 = 5.0
i0 = 1
tol = 1e-9
seed = 20240611
)cfg";

inline constexpr std::string_view kScalarDisk = R"cfg(# Single equation on the unit disk: -Delta z = lambda * (sqrt(z) + tan(z)), z = 0 on the circle
domain = disk
h = 1/64
bc = dirichlet
n = 1
f1 = "sqrt(s) + tan(s)"
rho = 15*pi/64
lambda = 1.6
tol = 1e-9
seed = 20240611
)cfg";

}  // namespace conesolve::builtin
