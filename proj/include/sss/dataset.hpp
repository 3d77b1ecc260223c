#pragma once

#include <sss/errors.hpp>
#include <sss/graph.hpp>

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sss {

/// Numeric sample matrix (rows = observations) with named columns.
class Dataset {
public:
    Dataset() = default;

    Dataset(Eigen::MatrixXd values, std::vector<std::string> names)
        : values_(std::move(values)), names_(std::move(names)) {
        if (static_cast<Eigen::Index>(names_.size()) != values_.cols()) {
            throw StructuralError("column name count does not match matrix width");
        }
        if (values_.rows() <= values_.cols() + 1) {
            throw ConfigError("dataset needs more than p+1 rows (have " + std::to_string(values_.rows()) +
                              " rows for " + std::to_string(values_.cols()) + " columns)");
        }
        if (!values_.allFinite()) {
            throw InputError("dataset contains non-finite values");
        }
    }

    Eigen::Index rows() const { return values_.rows(); }
    int columns() const { return static_cast<int>(values_.cols()); }
    const Eigen::MatrixXd& values() const { return values_; }
    const std::vector<std::string>& names() const { return names_; }

    Dataset select_rows(const std::vector<Eigen::Index>& rows) const {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), values_.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r] < 0 || rows[r] >= values_.rows()) {
                throw StructuralError("row index out of range");
            }
            out.row(static_cast<Eigen::Index>(r)) = values_.row(rows[r]);
        }
        return Dataset(std::move(out), names_);
    }

    int column_index(std::string_view name) const {
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (names_[i] == name) {
                return static_cast<int>(i);
            }
        }
        return -1;
    }

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> names_;
};

namespace detail {

// Splits one RFC-4180 record starting at `pos`; advances `pos` past the record terminator.
inline std::vector<std::string> read_record(std::string_view text, std::size_t& pos, std::size_t& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    while (pos < text.size()) {
        const char c = text[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field.push_back('"');
                    pos += 2;
                    continue;
                }
                quoted = false;
                ++pos;
                continue;
            }
            if (c == '\n') {
                ++line;
            }
            field.push_back(c);
            ++pos;
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
            ++pos;
            continue;
        }
        if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            field_started = false;
            ++pos;
            continue;
        }
        if (c == '\r' || c == '\n') {
            if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') {
                ++pos;
            }
            ++pos;
            ++line;
            fields.push_back(std::move(field));
            return fields;
        }
        field.push_back(c);
        field_started = true;
        ++pos;
    }
    if (quoted) {
        throw InputError("line " + std::to_string(line) + ": unterminated quoted field");
    }
    fields.push_back(std::move(field));
    ++line;
    return fields;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    if (s.empty()) {
        return false;
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace detail

/// CSV with a header row of variable names; rows with an unparseable cell are rejected.
inline Dataset parse_csv(std::string_view text) {
    std::size_t pos = 0;
    std::size_t line = 1;
    if (text.substr(0, 3) == "\xEF\xBB\xBF") {
        pos = 3;
    }
    if (pos >= text.size()) {
        throw InputError("CSV is empty; a header row is required");
    }
    std::vector<std::string> names;
    for (auto& f : detail::read_record(text, pos, line)) {
        names.emplace_back(detail::trim(f));
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i].empty()) {
            throw InputError("line 1: empty column name");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (names[i] == names[j]) {
                throw InputError("line 1: duplicate column name '" + names[i] + "'");
            }
        }
    }
    std::vector<double> cells;
    Eigen::Index rows = 0;
    while (pos < text.size()) {
        const std::size_t record_line = line;
        auto fields = detail::read_record(text, pos, line);
        if (fields.size() == 1 && detail::trim(fields[0]).empty()) {
            continue;
        }
        if (fields.size() != names.size()) {
            throw InputError("line " + std::to_string(record_line) + ": expected " + std::to_string(names.size()) +
                             " fields, found " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double v;
            if (!detail::parse_double(fields[c], v)) {
                throw InputError("line " + std::to_string(record_line) + ": cannot parse '" + fields[c] +
                                 "' in column '" + names[c] + "'");
            }
            cells.push_back(v);
        }
        ++rows;
    }
    const auto cols = static_cast<Eigen::Index>(names.size());
    Eigen::MatrixXd values(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            values(r, c) = cells[static_cast<std::size_t>(r * cols + c)];
        }
    }
    return Dataset(std::move(values), std::move(names));
}

inline Dataset read_csv(const std::string& path) {
    return parse_csv(detail::read_file(path));
}

/// Constraint lines of the form `<nameA> -/-> <nameB>`; `#` starts a comment.
inline ConstraintSet parse_constraints(std::string_view text, const std::vector<std::string>& names) {
    ConstraintSet out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        ++line_no;
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            if (end == text.size()) {
                break;
            }
            continue;
        }
        const auto arrow = line.find("-/->");
        if (arrow == std::string_view::npos) {
            throw InputError("constraints line " + std::to_string(line_no) + ": expected '<A> -/-> <B>'");
        }
        const auto lhs = detail::trim(line.substr(0, arrow));
        const auto rhs = detail::trim(line.substr(arrow + 4));
        auto lookup = [&](std::string_view name) {
            for (std::size_t i = 0; i < names.size(); ++i) {
                if (names[i] == name) {
                    return static_cast<int>(i);
                }
            }
            throw InputError("constraints line " + std::to_string(line_no) + ": unknown variable '" +
                             std::string(name) + "'");
        };
        const int a = lookup(lhs);
        const int b = lookup(rhs);
        if (a == b) {
            throw InputError("constraints line " + std::to_string(line_no) + ": a variable cannot constrain itself");
        }
        out.forbid(a, b);
        if (end == text.size()) {
            break;
        }
    }
    return out;
}

inline ConstraintSet read_constraints(const std::string& path, const std::vector<std::string>& names) {
    return parse_constraints(detail::read_file(path), names);
}

} // namespace sss
