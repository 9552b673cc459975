#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvrff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// All failures carry a stable kind tag so callers (and the CLI) can report
// them without string-matching free-form messages.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

enum class OutcomeKind { Continuous, MultiContinuous, Categorical };

inline const char* to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Continuous: return "continuous";
    case OutcomeKind::MultiContinuous: return "multi";
    case OutcomeKind::Categorical: return "categorical";
  }
  return "?";
}

inline OutcomeKind outcome_kind_from_string(const std::string& s) {
  if (s == "continuous") return OutcomeKind::Continuous;
  if (s == "multi") return OutcomeKind::MultiContinuous;
  if (s == "categorical") return OutcomeKind::Categorical;
  throw Error("InvalidArgument", "unknown outcome kind '" + s + "'");
}

struct Outcome {
  OutcomeKind kind = OutcomeKind::Continuous;
  Matrix values;                         // n x q, empty for categorical
  std::vector<int> labels;               // 1..K, empty unless categorical
  std::vector<std::string> class_names;  // original label strings, size K

  int n() const {
    return kind == OutcomeKind::Categorical ? static_cast<int>(labels.size())
                                            : static_cast<int>(values.rows());
  }
  // class_names is optional metadata; the label range is authoritative.
  int n_classes() const {
    if (!class_names.empty()) return static_cast<int>(class_names.size());
    int k = 0;
    for (int l : labels) k = std::max(k, l);
    return k;
  }
};

inline void require(bool cond, const char* kind, const std::string& msg) {
  if (!cond) throw Error(kind, msg);
}

}  // namespace mvrff
