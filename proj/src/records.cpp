#include <json.hpp>

#include "dnsxray/error.hpp"
#include "dnsxray/ingest.hpp"
#include "dnsxray/io.hpp"

namespace dnsxray {

namespace {

using json = nlohmann::json;

const json& require(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
    return *it;
}

std::string require_string(const json& obj, const char* key) {
    const auto& v = require(obj, key);
    if (!v.is_string()) throw std::invalid_argument(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::int64_t require_integer(const json& obj, const char* key) {
    const auto& v = require(obj, key);
    if (!v.is_number_integer()) throw std::invalid_argument(std::string("field '") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

AnswerRecord parse_answer(const json& a) {
    if (!a.is_object()) throw std::invalid_argument("answer must be an object");
    for (const auto& [key, _] : a.items())
        if (key != "rtype" && key != "ttl" && key != "rdata")
            throw std::invalid_argument("unknown answer field '" + key + "'");
    AnswerRecord rec;
    auto rtype = parse_rtype(require_string(a, "rtype"));
    if (!rtype) throw std::invalid_argument("unknown rtype");
    rec.rtype = *rtype;
    auto ttl = require_integer(a, "ttl");
    if (ttl < 0 || ttl > kMaxTtl) throw std::invalid_argument("ttl out of range");
    rec.ttl = static_cast<std::uint32_t>(ttl);
    rec.rdata = require_string(a, "rdata");
    if (rec.rtype != RType::A) rec.rdata = normalize_name(rec.rdata);
    return rec;
}

DnsObservation parse_line(std::string_view line) {
    json obj = json::parse(line);
    if (!obj.is_object()) throw std::invalid_argument("record is not a JSON object");
    for (const auto& [key, _] : obj.items())
        if (key != "ts" && key != "qname" && key != "qtype" && key != "rcode" && key != "answers" && key != "client")
            throw std::invalid_argument("unknown field '" + key + "'");

    DnsObservation obs;
    obs.timestamp = require_integer(obj, "ts");
    obs.qname = normalize_name(require_string(obj, "qname"));
    auto qtype = parse_qtype(require_string(obj, "qtype"));
    if (!qtype) throw std::invalid_argument("unknown qtype");
    obs.qtype = *qtype;
    auto rcode = parse_rcode(require_string(obj, "rcode"));
    if (!rcode) throw std::invalid_argument("unknown rcode");
    obs.rcode = *rcode;
    const auto& answers = require(obj, "answers");
    if (!answers.is_array()) throw std::invalid_argument("answers must be an array");
    for (const auto& a : answers) obs.answers.push_back(parse_answer(a));
    if (auto it = obj.find("client"); it != obj.end()) {
        if (!it->is_string()) throw std::invalid_argument("client must be a string");
        obs.client_id = it->get<std::string>();
    }
    if (auto err = validate_observation(obs)) throw std::invalid_argument(*err);
    return obs;
}

} // namespace

RecordParseResult parse_records_text(std::string_view text) {
    RecordParseResult result;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        try {
            result.observations.push_back(parse_line(line));
        } catch (const std::exception& e) {
            result.errors.push_back({line_no, e.what()});
        }
    }
    return result;
}

RecordParseResult parse_records(const std::filesystem::path& path) {
    return parse_records_text(read_file(path));
}

std::string format_record(const DnsObservation& obs) {
    nlohmann::ordered_json obj;
    obj["ts"] = obs.timestamp;
    obj["qname"] = obs.qname;
    obj["qtype"] = to_string(obs.qtype);
    obj["rcode"] = to_string(obs.rcode);
    auto answers = nlohmann::ordered_json::array();
    for (const auto& a : obs.answers) {
        nlohmann::ordered_json rec;
        rec["rtype"] = to_string(a.rtype);
        rec["ttl"] = a.ttl;
        rec["rdata"] = a.rdata;
        answers.push_back(std::move(rec));
    }
    obj["answers"] = std::move(answers);
    if (obs.client_id) obj["client"] = *obs.client_id;
    return obj.dump();
}

void write_records(std::span<const DnsObservation> observations, const std::filesystem::path& path) {
    std::string out;
    out.reserve(observations.size() * 128);
    for (const auto& obs : observations) {
        out += format_record(obs);
        out += '\n';
    }
    write_file_atomic(path, out);
}

} // namespace dnsxray
