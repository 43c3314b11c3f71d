#pragma once

#include <fftw3.h>

#include <Eigen/Dense>

namespace kfp {

// periodic box [-L/2, L/2) sampled at n_x equispaced points
struct FourierGrid {
    FourierGrid(double box_length, int n_x);

    double box_length;
    int n_x;

    double dx() const { return box_length / n_x; }
    double point(int m) const { return -box_length / 2 + m * dx(); }

    // wavenumbers in transform storage order: 0, 1, ..., n_x/2-1, -n_x/2,
    // ..., -1, each times 2 pi / L. The Nyquist index carries the negative
    // frequency and has no positive partner.
    double wavenumber(int idx) const;
    Eigen::VectorXd wavenumbers() const;
};

// in-place unnormalized transforms along the x index of an n_v by n_x
// column-major coefficient block; the plans are reusable across arrays of
// the same shape, so execution is safe to share between threads
class Fft {
  public:
    Fft(int n_v, int n_x);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    void forward(Eigen::MatrixXcd& a) const;
    void backward(Eigen::MatrixXcd& a) const;

  private:
    fftw_plan fwd_, bwd_;
};

const Fft& fft_for(int n_v, int n_x);

} // namespace kfp
