// Variance and third cumulant of a mesoscopic linear statistic for the free
// operator and a sparse perturbation of it.
#include <cstdio>

#include "mesofluct/cumulants.hpp"

using namespace mesofluct;

int main() {
    const auto J0 = free_jacobi();
    const auto J = make_preset("sparse(0.6,0.05,inv_log)");
    const auto f = TestFunction::parse("poisson");
    const double sigma2 = sigma_f_squared(f).sigma2;
    const int orders[] = {2, 3};
    std::printf("sigma_f^2 = %.6f\n%6s %14s %14s %14s %14s\n", sigma2, "n", "2 C2 free", "2 C2 sparse", "C3 free",
                "C3 sparse");
    for (SiteIndex n : {100, 200, 400}) {
        const auto cfg = MesoscopicConfig::make(0.3, 0.0, n);
        const auto rep = compare_cumulants(J0, J, f, cfg, orders);
        std::printf("%6lld %14.8f %14.8f %14.3e %14.3e\n", static_cast<long long>(n), 2 * rep[0].value_mu0, 2 * rep[0].value_mu,
                    rep[1].value_mu0, rep[1].value_mu);
    }
}
