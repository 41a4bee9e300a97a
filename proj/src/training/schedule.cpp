#include <cmath>
#include <sstream>

#include "ifenn/errors.hpp"
#include "ifenn/training.hpp"

namespace ifenn::train {

LrSchedule LrSchedule::constant(double rate) { return {{{0.0, rate}}}; }

LrSchedule LrSchedule::warm_hold_decay(double start, double peak, double end, int warm_epochs, int hold_epochs,
                                       int total_epochs) {
  if (warm_epochs < 0 || hold_epochs < 0 || warm_epochs + hold_epochs > total_epochs) {
    throw InvalidArgument("warm-up and hold must fit inside the total epoch count");
  }
  LrSchedule s;
  s.breakpoints.push_back({0.0, start});
  if (warm_epochs > 0) s.breakpoints.push_back({double(warm_epochs), peak});
  if (hold_epochs > 0) s.breakpoints.push_back({double(warm_epochs + hold_epochs), peak});
  if (total_epochs > warm_epochs + hold_epochs) s.breakpoints.push_back({double(total_epochs), end});
  s.validate();
  return s;
}

LrSchedule LrSchedule::parse(const std::string& text) {
  LrSchedule s;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("schedule entry '" + item + "' is not epoch:rate");
    try {
      s.breakpoints.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    } catch (const std::logic_error&) {
      throw ConfigError("schedule entry '" + item + "' is not numeric");
    }
  }
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

std::string LrSchedule::format() const {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    os << (i ? "," : "") << breakpoints[i].first << ":" << breakpoints[i].second;
  }
  return os.str();
}

double LrSchedule::rate(int epoch) const {
  if (breakpoints.empty()) throw InvalidArgument("empty learning rate schedule");
  const double e = epoch;
  if (e <= breakpoints.front().first) return breakpoints.front().second;
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    const auto [e0, r0] = breakpoints[i - 1];
    const auto [e1, r1] = breakpoints[i];
    if (e <= e1) return e1 > e0 ? r0 + (r1 - r0) * (e - e0) / (e1 - e0) : r1;
  }
  return breakpoints.back().second;
}

void LrSchedule::validate() const {
  if (breakpoints.empty()) throw InvalidArgument("learning rate schedule has no breakpoints");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    const auto [e, r] = breakpoints[i];
    if (!std::isfinite(e) || !std::isfinite(r) || r < 0.0) {
      throw InvalidArgument("learning rates must be finite and non-negative");
    }
    if (i > 0 && e < breakpoints[i - 1].first) throw InvalidArgument("schedule breakpoints must be sorted by epoch");
  }
}

}  // namespace ifenn::train
