#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace calabi {

// Fubini-Study geometry of CP^n in the affine chart z = (z_1, ..., z_n).
struct FubiniStudyPoint {
  Eigen::MatrixXcd g;    // g_{i jbar}, closed form
  Eigen::MatrixXcd ric;  // -d_i d_jbar log det g, by high-order finite differences
};

// Closed-form metric g_{i jbar} = d_i d_jbar log(1 + |z|^2).
Eigen::MatrixXcd fubini_study_metric(const std::vector<std::complex<double>>& z);
FubiniStudyPoint fubini_study(const std::vector<std::complex<double>>& z, double h = 1e-2);

// Curvature R_{i jbar k lbar} at the chart origin, as -d_k d_lbar g_{i jbar}
// by finite differences (first derivatives of g vanish there). Index order
// ((i n + j) n + k) n + l.
std::vector<std::complex<double>> fubini_study_origin_curvature(int n, double h = 1e-2);

// d_k d_lbar of a real function of z, sixth-order central differences.
std::complex<double> wirtinger_ddbar(const std::function<double(const std::vector<std::complex<double>>&)>& f,
                                     const std::vector<std::complex<double>>& z, int k, int l, double h);
std::complex<double> wirtinger_ddbar(
    const std::function<std::complex<double>(const std::vector<std::complex<double>>&)>& f,
    const std::vector<std::complex<double>>& z, int k, int l, double h);

}  // namespace calabi
