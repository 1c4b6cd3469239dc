#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace lrad {

enum class TraceEvent { none, improve, research, lr_decrease };

inline const char* trace_event_name(TraceEvent e) {
  switch (e) {
    case TraceEvent::none: return "none";
    case TraceEvent::improve: return "improve";
    case TraceEvent::research: return "research";
    case TraceEvent::lr_decrease: return "lr_decrease";
  }
  return "none";
}

struct TraceRecord {
  std::int64_t step = 0;
  std::optional<double> train_loss;
  std::optional<double> test_loss;
  double lr = 0.0;
  double clock = 0.0;
  TraceEvent event = TraceEvent::none;
};

// 17 significant digits: round-trips double exactly
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline constexpr const char* kTraceCsvHeader = "step,train_loss,test_loss,lr,clock,event";

inline void write_trace_row(std::ostream& os, const TraceRecord& r) {
  os << r.step << ',';
  if (r.train_loss) os << format_double(*r.train_loss);
  os << ',';
  if (r.test_loss) os << format_double(*r.test_loss);
  os << ',' << format_double(r.lr) << ',' << format_double(r.clock) << ','
     << trace_event_name(r.event) << '\n';
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
  os << kTraceCsvHeader << '\n';
  for (const TraceRecord& r : trace) write_trace_row(os, r);
}

}  // namespace lrad
