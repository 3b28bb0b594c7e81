#include "tminimax/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include <json.hpp>
#include <unistd.h>

namespace tminimax {

using nlohmann::json;

TableFormat parse_format(const std::string& name) {
    if (name == "csv") return TableFormat::Csv;
    if (name == "json") return TableFormat::Json;
    throw DomainError("unknown format '" + name + "'");
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

struct Field {
    std::string_view text;
    std::size_t column;  // 1-based character column
};

std::vector<Field> split_line(std::string_view line) {
    std::vector<Field> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        const std::size_t end = comma == std::string_view::npos ? line.size() : comma;
        std::string_view f = line.substr(start, end - start);
        std::size_t col = start + 1;
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) {
            f.remove_prefix(1);
            ++col;
        }
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
        out.push_back({f, col});
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

double parse_number(const Field& f, std::size_t line) {
    double v = 0.0;
    const char* first = f.text.data();
    const char* last = first + f.text.size();
    if (!f.text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (f.text.empty() || ec != std::errc() || ptr != last)
        throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(f.column) +
                             ": not a number '" + std::string(f.text) + "'",
                         line, f.column);
    return v;
}

// Parses the unit-indexed layout shared by outcome and assignment files.
Matrix parse_grid(std::string_view text) {
    const std::vector<std::string_view> lines = split_lines(text);
    if (lines.empty()) throw ParseError("empty input: expected a header line 'unit,t1,...'", 1, 0);
    const std::vector<Field> header = split_line(lines[0]);
    if (header[0].text != "unit") throw ParseError("line 1: header must start with 'unit'", 1, header[0].column);
    const std::size_t T = header.size() - 1;
    if (T == 0) throw ParseError("line 1: header names no periods", 1, 0);
    for (std::size_t j = 1; j <= T; ++j)
        if (header[j].text != "t" + std::to_string(j))
            throw ParseError("line 1: expected column 't" + std::to_string(j) + "'", 1, header[j].column);
    if (lines.size() == 1) throw ParseError("empty input: header but no rows", 2, 0);
    Matrix m(lines.size() - 1, T);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const std::size_t line = r + 1;
        const std::vector<Field> fields = split_line(lines[r]);
        if (fields.size() != T + 1)
            throw ParseError("line " + std::to_string(line) + " (row " + std::to_string(r) + "): expected " +
                                 std::to_string(T + 1) + " fields, found " + std::to_string(fields.size()),
                             line, 0);
        if (parse_number(fields[0], line) != static_cast<double>(r))
            throw ParseError("line " + std::to_string(line) + ": unit index must be " + std::to_string(r), line,
                             fields[0].column);
        for (std::size_t j = 0; j < T; ++j) m(r - 1, j) = parse_number(fields[j + 1], line);
    }
    return m;
}

std::string grid_header(std::size_t T) {
    std::string s = "unit";
    for (std::size_t j = 1; j <= T; ++j) s += ",t" + std::to_string(j);
    return s + "\n";
}

}  // namespace

Matrix parse_matrix_csv(std::string_view text) { return parse_grid(text); }

std::string format_matrix_csv(const Matrix& m) {
    std::string out = grid_header(m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out += std::to_string(i + 1);
        for (std::size_t j = 0; j < m.cols(); ++j) out += "," + format_double(m(i, j));
        out += "\n";
    }
    return out;
}

Matrix read_matrix_csv(const std::filesystem::path& path) { return parse_matrix_csv(read_file(path)); }

AssignmentMatrix parse_assignment_csv(std::string_view text, std::optional<ArmFamily> family) {
    const Matrix m = parse_grid(text);
    const int T = static_cast<int>(m.cols());
    if (T < 2) throw ParseError("assignment needs at least 2 periods", 1, 0);
    // Per row: number of ones and the first treated period.
    std::vector<ArmId> labels;
    bool wedge_seen = false;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const std::size_t line = i + 2;
        int ones = 0;
        int first = 0;
        int last = 0;
        for (int t = 1; t <= T; ++t) {
            const double v = m(i, static_cast<std::size_t>(t - 1));
            if (v != 0.0 && v != 1.0)
                throw ParseError("line " + std::to_string(line) + ": assignment entries must be 0 or 1", line, 0);
            if (v == 1.0) {
                ++ones;
                if (first == 0) first = t;
                last = t;
            }
        }
        const bool contiguous = ones == last - first + 1;
        if (ones == 0) labels.push_back(ArmId::control());
        else if (ones == T) labels.push_back(ArmId::treated());
        else if (ones == 1 && first >= 2) labels.push_back(ArmId::pulse(first));
        else if (contiguous && last == T && first >= 2) {
            labels.push_back(ArmId::pulse(first));
            wedge_seen = true;
        } else
            throw ParseError("line " + std::to_string(line) + ": row is not a control, treated, pulse or wedge vector",
                             line, 0);
    }
    const ArmFamily fam = family.value_or(wedge_seen ? ArmFamily::Wedge : ArmFamily::Pulse);
    AssignmentMatrix Z(std::move(labels), T, fam);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const AssignmentVector row = Z.row(i);
        for (std::size_t j = 0; j < row.size(); ++j)
            if (static_cast<double>(row[j]) != m(i, j))
                throw ParseError("line " + std::to_string(i + 2) + ": row does not match the " +
                                     (fam == ArmFamily::Wedge ? "wedge" : "pulse") + " family",
                                 i + 2, 0);
    }
    return Z;
}

std::string format_assignment_csv(const AssignmentMatrix& Z) {
    std::string out = grid_header(static_cast<std::size_t>(Z.T()));
    for (std::size_t i = 0; i < Z.N(); ++i) {
        out += std::to_string(i + 1);
        for (std::uint8_t b : Z.row(i)) out += b ? ",1" : ",0";
        out += "\n";
    }
    return out;
}

AssignmentMatrix read_assignment_csv(const std::filesystem::path& path, std::optional<ArmFamily> family) {
    return parse_assignment_csv(read_file(path), family);
}

PotentialOutcomeSchedule parse_schedule_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("schedule JSON: ") + e.what(), 0, e.byte);
    }
    try {
        const auto N = j.at("N").get<std::size_t>();
        const int T = j.at("T").get<int>();
        if (T < 2) throw DomainError("schedule needs T >= 2");
        const json& arms = j.at("arms");
        if (arms.size() != static_cast<std::size_t>(T) + 1)
            throw DomainError("schedule must list exactly T + 1 arms");
        PotentialOutcomeSchedule sched(N, T);
        for (const auto& [key, rows] : arms.items()) {
            const ArmId arm = ArmId::from_key(key);
            if (!arm.valid_for(T)) throw InvalidArm("arm '" + key + "' invalid for T = " + std::to_string(T));
            if (rows.size() != N) throw DomainError("arm '" + key + "' must have N rows");
            Matrix& m = sched[arm];
            for (std::size_t i = 0; i < N; ++i) {
                if (rows[i].size() != static_cast<std::size_t>(T))
                    throw DomainError("arm '" + key + "' row " + std::to_string(i + 1) + " must have T entries");
                for (std::size_t c = 0; c < static_cast<std::size_t>(T); ++c) m(i, c) = rows[i][c].get<double>();
            }
        }
        return sched;
    } catch (const json::exception& e) {
        throw ParseError(std::string("schedule JSON: ") + e.what(), 0, 0);
    }
}

std::string format_schedule_json(const PotentialOutcomeSchedule& sched) {
    json arms = json::object();
    for (int a = 0; a <= sched.T(); ++a) {
        const ArmId arm = ArmId::from_index(a);
        const Matrix& m = sched[arm];
        json rows = json::array();
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const auto r = m.row(i);
            rows.push_back(std::vector<double>(r.begin(), r.end()));
        }
        arms[arm.key()] = std::move(rows);
    }
    json j = {{"N", sched.N()}, {"T", sched.T()}, {"arms", std::move(arms)}};
    return j.dump() + "\n";
}

PotentialOutcomeSchedule read_schedule_json(const std::filesystem::path& path) {
    return parse_schedule_json(read_file(path));
}

namespace {

std::string csv_cell(const Cell& c) {
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

json json_cell(const Cell& c) {
    return std::visit([](const auto& v) { return json(v); }, c);
}

}  // namespace

std::string format_table(const Table& table, TableFormat format) {
    if (format == TableFormat::Json) {
        json rows = json::array();
        for (const auto& row : table.rows) {
            json obj = json::object();
            for (std::size_t c = 0; c < table.columns.size(); ++c) obj[table.columns[c]] = json_cell(row[c]);
            rows.push_back(std::move(obj));
        }
        return rows.dump(2) + "\n";
    }
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) out += (c ? "," : "") + table.columns[c];
    out += "\n";
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + csv_cell(row[c]);
        out += "\n";
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw std::runtime_error("write to '" + tmp.string() + "' failed");
        }
    }
    std::filesystem::rename(tmp, path);
}

void write_table(const std::filesystem::path& path, const Table& table, TableFormat format) {
    write_file_atomic(path, format_table(table, format));
}

}  // namespace tminimax
