#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dhgreg/common.hpp"

namespace dhg {

/// One account-creation event. Entity fields are empty strings when absent;
/// at least one of the four must be present. label is empty for unlabeled
/// accounts (excluded from loss and metrics).
struct RegistrationRecord {
  std::string account_id;
  int64_t timestamp = 0;  // UTC epoch seconds
  std::string email;
  std::string address;
  std::string phone;
  std::string ip;
  std::vector<real> features;
  std::optional<int> label;  // 0 benign, 1 suspicious

  bool has_any_entity() const {
    return !email.empty() || !address.empty() || !phone.empty() || !ip.empty();
  }
};

}  // namespace dhg
