#pragma once

#include <Eigen/Dense>
#include <complex>

namespace scran {

using Real = double;
using Complex = std::complex<double>;

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using RowC = Eigen::RowVectorXcd;

inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }

} // namespace scran
