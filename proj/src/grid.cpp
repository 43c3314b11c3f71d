#include "kfp/grid.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "kfp/errors.hpp"

namespace kfp {

FourierGrid::FourierGrid(double box_length_, int n_x_) : box_length(box_length_), n_x(n_x_) {
    if (!(box_length > 0.0))
        throw precondition_error("FourierGrid: box length must be positive");
    if (n_x < 2 || n_x % 2 != 0)
        throw precondition_error("FourierGrid: n_x = " + std::to_string(n_x)
                                 + " must be a positive even integer");
}

double FourierGrid::wavenumber(int idx) const {
    int k = idx < n_x / 2 ? idx : idx - n_x;
    return 2 * M_PI * k / box_length;
}

Eigen::VectorXd FourierGrid::wavenumbers() const {
    Eigen::VectorXd out(n_x);
    for (int i = 0; i < n_x; ++i) out[i] = wavenumber(i);
    return out;
}

Fft::Fft(int n_v, int n_x) {
    std::vector<std::complex<double>> dummy(size_t(n_v) * n_x);
    auto* p = reinterpret_cast<fftw_complex*>(dummy.data());
    int n[1] = {n_x};
    fwd_ = fftw_plan_many_dft(1, n, n_v, p, nullptr, n_v, 1, p, nullptr, n_v, 1,
                              FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    bwd_ = fftw_plan_many_dft(1, n, n_v, p, nullptr, n_v, 1, p, nullptr, n_v, 1,
                              FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!fwd_ || !bwd_) throw numerical_error("Fft: planner failed");
}

Fft::~Fft() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
}

void Fft::forward(Eigen::MatrixXcd& a) const {
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    fftw_execute_dft(fwd_, p, p);
}

void Fft::backward(Eigen::MatrixXcd& a) const {
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    fftw_execute_dft(bwd_, p, p);
}

const Fft& fft_for(int n_v, int n_x) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<Fft>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{n_v, n_x}];
    if (!slot) slot = std::make_unique<Fft>(n_v, n_x);
    return *slot;
}

} // namespace kfp
