#pragma once

#include <span>

#include <Eigen/Core>
#include <json.hpp>

#include "stcal/qsim/config.hpp"
#include "stcal/qsim/pulse.hpp"

namespace stcal::surrogate {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Input scaling stored with every checkpoint.
struct Normalization {
  double eps_scale = 1.0;  // channel 0 = eps [mV] * eps_scale
  double dbz_scale = 1.0;  // channel 1 = dbz [rad/ns] * dbz_scale
  int l_max = 50;          // encoder capacity in segments
};

// eps_scale = 1 / |eps_min|.
Normalization default_normalization(const qsim::QubitConfig& cfg, int l_max);

nlohmann::json to_json(const Normalization& n);
Normalization normalization_from_json(const nlohmann::json& j);

// (l_max, 3): scaled eps, scaled dbz, mask. Rows past the pulse are zero.
// Throws DomainError if the pulse is longer than l_max.
Eigen::MatrixXd encode_input(const qsim::ControlPulse& pulse, const Normalization& norm);

// Network input for a batch: (3, S * B) with S = l_max + 2 * pad, column t * B + b holding
// time step t of sample b. The pad steps are zero.
template <typename T>
Mat<T> batch_input(std::span<const qsim::ControlPulse* const> pulses, const Normalization& norm, int pad);

}  // namespace stcal::surrogate
