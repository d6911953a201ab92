#include "pglab/io.hpp"

#include "pglab/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pglab {

namespace {

using nlohmann::json;

void dump_value(const json& value, std::string& out);

void dump_number(const json& value, std::string& out) {
    if (value.is_number_float()) {
        out += format_double(value.get<double>());
    } else if (value.is_number_unsigned()) {
        out += std::to_string(value.get<std::uint64_t>());
    } else {
        out += std::to_string(value.get<std::int64_t>());
    }
}

void dump_value(const json& value, std::string& out) {
    switch (value.type()) {
    case json::value_t::null:
        out += "null";
        break;
    case json::value_t::boolean:
        out += value.get<bool>() ? "true" : "false";
        break;
    case json::value_t::string:
        out += json(value.get<std::string>()).dump(); // reuse the escaper
        break;
    case json::value_t::array: {
        out += '[';
        bool first = true;
        for (const auto& item : value) {
            if (!first) out += ',';
            first = false;
            dump_value(item, out);
        }
        out += ']';
        break;
    }
    case json::value_t::object: {
        // nlohmann's default object is backed by std::map, so iteration is
        // already in sorted key order.
        out += '{';
        bool first = true;
        for (auto it = value.begin(); it != value.end(); ++it) {
            if (!first) out += ',';
            first = false;
            out += json(it.key()).dump();
            out += ':';
            dump_value(it.value(), out);
        }
        out += '}';
        break;
    }
    default:
        dump_number(value, out);
        break;
    }
}

bool csv_needs_quoting(const std::string& field) {
    return field.find_first_of(",\"\n\r") != std::string::npos;
}

std::string csv_field(const std::string& field) {
    if (!csv_needs_quoting(field)) return field;
    std::string quoted = "\"";
    for (char c : field) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::string scalar_as_text(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
    if (value.is_null()) return "null";
    std::string out;
    dump_number(value, out);
    return out;
}

void csv_rows(const json& value, const std::string& run_id, const std::string& quantity,
              const std::string& coordinate, std::string& out) {
    if (value.is_object()) {
        for (auto it = value.begin(); it != value.end(); ++it)
            csv_rows(it.value(), run_id,
                     quantity.empty() ? it.key() : quantity + "." + it.key(), coordinate, out);
    } else if (value.is_array()) {
        int index = 0;
        for (const auto& item : value) {
            csv_rows(item, run_id, quantity,
                     coordinate.empty() ? std::to_string(index)
                                        : coordinate + "." + std::to_string(index),
                     out);
            ++index;
        }
    } else {
        out += csv_field(run_id);
        out += ',';
        out += csv_field(quantity);
        out += ',';
        out += csv_field(coordinate);
        out += ',';
        out += csv_field(scalar_as_text(value));
        out += '\n';
    }
}

int line_of_byte_offset(const std::string& text, std::size_t offset) {
    const std::size_t end = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(end), '\n'));
}

const json& require_key(const json& doc, const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end()) throw ParseError(std::string("mdp file: missing key '") + key + "'");
    return *it;
}

double number_at(const json& value, const char* what) {
    if (!value.is_number()) throw ParseError(std::string(what) + " must be a number");
    return value.get<double>();
}

int int_at(const json& value, const char* what) {
    if (!value.is_number_integer())
        throw ParseError(std::string(what) + " must be an integer");
    return value.get<int>();
}

} // namespace

std::string format_double(double value) {
    if (!std::isfinite(value))
        throw ContractViolation("format_double: non-finite value in output");
    char buf[64];
    const auto result =
        std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return std::string(buf, result.ptr);
}

std::string canonical_dump(const nlohmann::json& value) {
    std::string out;
    dump_value(value, out);
    return out;
}

std::string csv_dump(const nlohmann::json& report, const std::string& run_id) {
    std::string out = "run_id,quantity,coordinate,value\n";
    csv_rows(report, run_id, "", "", out);
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open file for writing: " + path);
    out << text;
    if (!out) throw Error("failed writing file: " + path);
}

nlohmann::json parse_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("parse error in " + path + " at line " +
                         std::to_string(line_of_byte_offset(text, e.byte)) + ": " + e.what());
    }
}

nlohmann::json mdp_to_json(const Mdp& mdp) {
    json doc;
    doc["num_states"] = mdp.num_states();
    doc["num_actions"] = mdp.num_actions();
    doc["gamma"] = mdp.gamma();
    json transition = json::array();
    for (int s = 0; s < mdp.num_states(); ++s) {
        json per_action = json::array();
        for (int a = 0; a < mdp.num_actions(); ++a) {
            json row = json::array();
            for (int next = 0; next < mdp.num_states(); ++next)
                row.push_back(mdp.transition(s, a, next));
            per_action.push_back(std::move(row));
        }
        transition.push_back(std::move(per_action));
    }
    doc["transition"] = std::move(transition);
    doc["reward"] = matrix_to_json(mdp.rewards());
    doc["initial"] = vector_to_json(mdp.initial());
    json terminal = json::array();
    for (int s = 0; s < mdp.num_states(); ++s) terminal.push_back(mdp.is_terminal(s));
    doc["terminal"] = std::move(terminal);
    return doc;
}

Mdp mdp_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ParseError("mdp file: top-level value must be an object");
    const int num_states = int_at(require_key(doc, "num_states"), "num_states");
    const int num_actions = int_at(require_key(doc, "num_actions"), "num_actions");
    if (num_states <= 0 || num_actions <= 0)
        throw ParseError("mdp file: num_states and num_actions must be positive");
    const double gamma = number_at(require_key(doc, "gamma"), "gamma");

    const json& transition = require_key(doc, "transition");
    if (!transition.is_array() || static_cast<int>(transition.size()) != num_states)
        throw ParseError("mdp file: transition must be a [state][action][state] array");
    std::vector<Eigen::MatrixXd> per_action(
        static_cast<std::size_t>(num_actions), Eigen::MatrixXd::Zero(num_states, num_states));
    for (int s = 0; s < num_states; ++s) {
        const json& rows = transition[static_cast<std::size_t>(s)];
        if (!rows.is_array() || static_cast<int>(rows.size()) != num_actions)
            throw ParseError("mdp file: transition must be a [state][action][state] array");
        for (int a = 0; a < num_actions; ++a) {
            const json& row = rows[static_cast<std::size_t>(a)];
            if (!row.is_array() || static_cast<int>(row.size()) != num_states)
                throw ParseError("mdp file: transition must be a [state][action][state] array");
            for (int next = 0; next < num_states; ++next)
                per_action[static_cast<std::size_t>(a)](s, next) =
                    number_at(row[static_cast<std::size_t>(next)], "transition entry");
        }
    }

    const Eigen::MatrixXd reward = matrix_from_json(require_key(doc, "reward"), "reward");
    const Eigen::VectorXd initial = vector_from_json(require_key(doc, "initial"), "initial");

    const json& terminal_json = require_key(doc, "terminal");
    if (!terminal_json.is_array() || static_cast<int>(terminal_json.size()) != num_states)
        throw ParseError("mdp file: terminal must be a boolean array over states");
    std::vector<bool> terminal(static_cast<std::size_t>(num_states));
    for (int s = 0; s < num_states; ++s) {
        const json& flag = terminal_json[static_cast<std::size_t>(s)];
        if (!flag.is_boolean()) throw ParseError("mdp file: terminal entries must be booleans");
        terminal[static_cast<std::size_t>(s)] = flag.get<bool>();
    }

    try {
        Mdp mdp(num_states, num_actions, gamma, per_action, reward, initial, terminal);
        const ValidationReport report = validate_mdp(mdp);
        if (!report.ok()) throw ParseError("mdp file: " + report.to_string());
        return mdp;
    } catch (const ContractViolation& e) {
        throw ParseError(std::string("mdp file: ") + e.what());
    }
}

Mdp load_mdp(const std::string& path) { return mdp_from_json(parse_json_file(path)); }

void write_mdp(const Mdp& mdp, const std::string& path) {
    write_text_file(path, canonical_dump(mdp_to_json(mdp)) + "\n");
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        a.push_back(std::move(row));
    }
    return a;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& a, const char* what) {
    if (!a.is_array()) throw ParseError(std::string(what) + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    Eigen::Index i = 0;
    for (const auto& item : a) v(i++) = number_at(item, what);
    return v;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& a, const char* what) {
    if (!a.is_array() || a.empty())
        throw ParseError(std::string(what) + " must be a non-empty 2-d array");
    const auto rows = static_cast<Eigen::Index>(a.size());
    const auto& first = a.front();
    if (!first.is_array()) throw ParseError(std::string(what) + " must be a 2-d array");
    const auto cols = static_cast<Eigen::Index>(first.size());
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index r = 0;
    for (const auto& row : a) {
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ParseError(std::string(what) + " rows must all have the same length");
        Eigen::Index c = 0;
        for (const auto& item : row) m(r, c++) = number_at(item, what);
        ++r;
    }
    return m;
}

Eigen::MatrixXd load_table(const std::string& path, const std::string& key) {
    const json doc = parse_json_file(path);
    if (!doc.is_object() || !doc.contains(key))
        throw ParseError(path + ": expected an object with key '" + key + "'");
    return matrix_from_json(doc.at(key), key.c_str());
}

std::vector<Eigen::MatrixXd> load_feature_tensor(const std::string& path) {
    const json doc = parse_json_file(path);
    if (!doc.is_object() || !doc.contains("features"))
        throw ParseError(path + ": expected an object with key 'features'");
    const json& tensor = doc.at("features");
    if (!tensor.is_array()) throw ParseError("features must be a 3-d array [s][a][k]");
    std::vector<Eigen::MatrixXd> phi;
    phi.reserve(tensor.size());
    for (const auto& per_state : tensor) phi.push_back(matrix_from_json(per_state, "features"));
    return phi;
}

} // namespace pglab
