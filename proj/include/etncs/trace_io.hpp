#pragma once

// CSV serialization of TraceLog.
//
// trace.csv columns, in this fixed order (vector signals expand to
// name[0], name[1], ...):
//   t, x_p, y_p, e_p, u_p, x_c, y_c, e_c, u_c, y_r, u_r, yc_tilde, uc_tilde,
//   y_qp, y_qc, w1, w2
// events.csv columns:
//   side, time, row, delivered, arrival_time, value[...], payload[...]
// Numbers are written as %.16e so that every double round-trips exactly.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "etncs/sim.hpp"

namespace etncs {

class TraceFormatError : public Error {
public:
    using Error::Error;
};

namespace trace_io {

[[nodiscard]] inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

struct Field {
    const char* name;
    Vec TraceRow::*member;
};

inline const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        {"x_p", &TraceRow::x_p},   {"y_p", &TraceRow::y_p},         {"e_p", &TraceRow::e_p},
        {"u_p", &TraceRow::u_p},   {"x_c", &TraceRow::x_c},         {"y_c", &TraceRow::y_c},
        {"e_c", &TraceRow::e_c},   {"u_c", &TraceRow::u_c},         {"y_r", &TraceRow::y_r},
        {"u_r", &TraceRow::u_r},   {"yc_tilde", &TraceRow::yc_tilde}, {"uc_tilde", &TraceRow::uc_tilde},
        {"y_qp", &TraceRow::y_qp}, {"y_qc", &TraceRow::y_qc},       {"w1", &TraceRow::w1},
        {"w2", &TraceRow::w2},
    };
    return f;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    for (auto& s : out) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
        while (!s.empty() && s.front() == ' ') s.erase(s.begin());
    }
    return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw TraceFormatError("malformed number '" + s + "' on line " + std::to_string(line));
    return v;
}

// "name[3]" -> ("name", 3); plain names map to index 0.
inline std::pair<std::string, std::size_t> column_key(const std::string& col) {
    const auto lb = col.find('[');
    if (lb == std::string::npos || col.back() != ']') return {col, 0};
    return {col.substr(0, lb), static_cast<std::size_t>(std::stoul(col.substr(lb + 1, col.size() - lb - 2)))};
}

}  // namespace trace_io

inline void write_trace_csv(const TraceLog& log, std::ostream& os) {
    using namespace trace_io;
    os << "t";
    if (!log.rows.empty()) {
        const auto& r0 = log.rows.front();
        for (const auto& f : fields())
            for (std::size_t i = 0; i < (r0.*f.member).size(); ++i) os << ',' << f.name << '[' << i << ']';
    }
    os << '\n';
    for (const auto& r : log.rows) {
        os << fmt(r.t);
        for (const auto& f : fields())
            for (double v : r.*f.member) os << ',' << fmt(v);
        os << '\n';
    }
}

inline void write_events_csv(const TraceLog& log, std::ostream& os) {
    using namespace trace_io;
    const std::size_t m = log.events.empty() ? 0 : log.events.front().value.size();
    os << "side,time,row,delivered,arrival_time";
    for (std::size_t i = 0; i < m; ++i) os << ",value[" << i << ']';
    for (std::size_t i = 0; i < m; ++i) os << ",payload[" << i << ']';
    os << '\n';
    for (const auto& e : log.events) {
        os << to_string(e.side) << ',' << fmt(e.time) << ',' << e.row << ',' << (e.delivered ? 1 : 0) << ','
           << fmt(e.arrival_time);
        for (double v : e.value) os << ',' << fmt(v);
        for (double v : e.payload) os << ',' << fmt(v);
        os << '\n';
    }
}

/// Reads rows back; h and t_end are inferred from the time column.
[[nodiscard]] inline TraceLog read_trace_csv(std::istream& is) {
    using namespace trace_io;
    std::string line;
    if (!std::getline(is, line) || line.empty()) throw TraceFormatError("trace: missing header");
    const auto header = split(line);
    if (header.empty() || header[0] != "t") throw TraceFormatError("trace: first column must be 't'");

    std::map<std::string, Vec TraceRow::*> members;
    for (const auto& f : fields()) members[f.name] = f.member;
    struct Slot {
        Vec TraceRow::*member;
        std::size_t index;
    };
    std::vector<Slot> slots;
    std::map<std::string, std::size_t> dims;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const auto [name, idx] = column_key(header[c]);
        const auto it = members.find(name);
        if (it == members.end()) throw TraceFormatError("trace: unknown column '" + header[c] + "'");
        slots.push_back({it->second, idx});
        dims[name] = std::max(dims[name], idx + 1);
    }

    TraceLog log;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw TraceFormatError("trace: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                                   " cells, expected " + std::to_string(header.size()));
        TraceRow r;
        r.t = parse_double(cells[0], lineno);
        for (const auto& [name, d] : dims) (r.*members[name]).assign(d, 0.0);
        for (std::size_t c = 1; c < cells.size(); ++c)
            (r.*slots[c - 1].member)[slots[c - 1].index] = parse_double(cells[c], lineno);
        log.rows.push_back(std::move(r));
    }
    if (log.rows.empty()) throw TraceFormatError("trace: no rows");
    log.t_end = log.rows.back().t;
    log.h = log.rows.size() > 1 ? log.rows[1].t - log.rows[0].t : 0.0;
    return log;
}

[[nodiscard]] inline std::vector<EventRecord> read_events_csv(std::istream& is) {
    using namespace trace_io;
    std::string line;
    if (!std::getline(is, line) || line.empty()) throw TraceFormatError("events: missing header");
    const auto header = split(line);
    if (header.size() < 5 || header[0] != "side") throw TraceFormatError("events: unexpected header");
    const std::size_t m = (header.size() - 5) / 2;

    std::vector<EventRecord> events;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw TraceFormatError("events: line " + std::to_string(lineno) + " has wrong cell count");
        EventRecord e;
        if (cells[0] == "plant") e.side = Side::plant;
        else if (cells[0] == "controller") e.side = Side::controller;
        else throw TraceFormatError("events: unknown side '" + cells[0] + "'");
        e.time = parse_double(cells[1], lineno);
        e.row = static_cast<std::size_t>(parse_double(cells[2], lineno));
        e.delivered = cells[3] == "1";
        e.arrival_time = parse_double(cells[4], lineno);
        for (std::size_t i = 0; i < m; ++i) e.value.push_back(parse_double(cells[5 + i], lineno));
        for (std::size_t i = 0; i < m; ++i) e.payload.push_back(parse_double(cells[5 + m + i], lineno));
        events.push_back(std::move(e));
    }
    return events;
}

}  // namespace etncs
