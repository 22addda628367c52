#include "hocroute/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <set>
#include <utility>
#include <sstream>

#include <json.hpp>

namespace hocroute::io {

using nlohmann::json;

namespace {

[[noreturn]] void record_error(std::size_t line, const std::string& field, const std::string& what) {
    throw InvalidInput("line " + std::to_string(line) + ", field '" + field + "': " + what);
}

std::vector<double> number_array(const json& j, std::size_t line, const std::string& field) {
    if (!j.is_array()) record_error(line, field, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) record_error(line, field, "expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

LabelDistribution distribution(const json& j, std::size_t line, const std::string& field, std::size_t num_classes) {
    auto values = number_array(j, line, field);
    if (values.size() != num_classes) {
        record_error(line, field,
                     "has " + std::to_string(values.size()) + " entries, expected " + std::to_string(num_classes));
    }
    try {
        return LabelDistribution(std::move(values));
    } catch (const InvalidInput& e) {
        record_error(line, field, e.what());
    }
}

json dist_json(const LabelDistribution& p) { return json(std::vector<double>(p.probs().begin(), p.probs().end())); }

LabelDistribution dist_from(const json& j) { return LabelDistribution(j.get<std::vector<double>>()); }

json mixture_json(const TaggedMixture& m) {
    json entries = json::array();
    for (const auto& e : m.entries) entries.push_back(json::array({dist_json(e.weak_pred), dist_json(e.snapshot_mean)}));
    return entries;
}

TaggedMixture mixture_from(const json& j) {
    TaggedMixture m;
    m.entries.reserve(j.size());
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2) throw InvalidInput("model mixture entry must be a [prediction, mean] pair");
        m.entries.push_back({dist_from(e[0]), dist_from(e[1])});
    }
    return m;
}

void check_format(const json& j, const char* format, const std::string& what) {
    if (!j.is_object() || j.value("format", "") != format) throw InvalidInput(what + " is missing format tag '" + format + "'");
    if (j.value("version", -1) != kFormatVersion) {
        throw InvalidInput(what + " has unsupported version; expected " + std::to_string(kFormatVersion));
    }
}

}  // namespace

std::filesystem::path header_path(const std::filesystem::path& dataset) {
    return std::filesystem::path(dataset.string() + ".header.json");
}

DatasetHeader read_header(const std::filesystem::path& dataset) {
    const auto path = header_path(dataset);
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw InvalidInput("dataset header " + path.string() + " is not valid JSON: " + e.what());
    }
    check_format(j, kDatasetFormat, "dataset header " + path.string());
    DatasetHeader h;
    if (!j.contains("num_classes") || !j["num_classes"].is_number_unsigned()) {
        throw InvalidInput("dataset header " + path.string() + " needs a non-negative integer num_classes");
    }
    h.num_classes = j["num_classes"].get<std::size_t>();
    if (h.num_classes < 2) throw InvalidInput("dataset header num_classes must be at least 2");
    if (j.contains("class_names")) {
        h.class_names = j["class_names"].get<std::vector<std::string>>();
        if (h.class_names.size() != h.num_classes) throw InvalidInput("class_names length differs from num_classes");
    }
    return h;
}

SnapshotExample parse_record(const std::string& line, std::size_t line_number, std::size_t num_classes,
                             bool require_labels) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception&) {
        record_error(line_number, "<record>", "not valid JSON");
    }
    if (!j.is_object()) record_error(line_number, "<record>", "expected a JSON object");

    if (!j.contains("id") || !j["id"].is_string()) record_error(line_number, "id", "missing or not a string");
    std::string id = j["id"].get<std::string>();

    std::optional<std::vector<double>> features;
    if (j.contains("features") && !j["features"].is_null()) features = number_array(j["features"], line_number, "features");

    if (!j.contains("weak_probs")) record_error(line_number, "weak_probs", "missing");
    LabelDistribution weak = distribution(j["weak_probs"], line_number, "weak_probs", num_classes);

    std::optional<LabelDistribution> p_star;
    if (j.contains("p_star") && !j["p_star"].is_null()) {
        p_star = distribution(j["p_star"], line_number, "p_star", num_classes);
    }

    std::vector<int> labels;
    if (j.contains("labels")) {
        const auto& lj = j["labels"];
        if (!lj.is_array()) record_error(line_number, "labels", "expected an array of class indices");
        for (const auto& v : lj) {
            if (!v.is_number_integer()) record_error(line_number, "labels", "entries must be integers");
            const auto c = v.get<std::int64_t>();
            if (c < 0 || static_cast<std::size_t>(c) >= num_classes) {
                record_error(line_number, "labels", "class index " + std::to_string(c) + " out of range");
            }
            labels.push_back(static_cast<int>(c));
        }
        if (labels.empty()) record_error(line_number, "labels", "must be nonempty");
    } else if (require_labels) {
        record_error(line_number, "labels", "missing");
    }

    if (labels.empty()) {
        return SnapshotExample{std::move(id), std::move(features), weak, {}, weak, std::move(p_star)};
    }
    return make_example(std::move(id), std::move(features), std::move(weak), std::move(labels), std::move(p_star));
}

std::vector<SnapshotExample> ingest(std::istream& in, std::size_t num_classes) {
    std::vector<SnapshotExample> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto ex = parse_record(line, line_number, num_classes);
        if (!seen.insert(ex.id).second) record_error(line_number, "id", "duplicate id '" + ex.id + "'");
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<SnapshotExample> ingest(const std::filesystem::path& dataset) {
    const DatasetHeader header = read_header(dataset);
    std::ifstream in(dataset);
    if (!in) throw InvalidInput("cannot open dataset " + dataset.string());
    try {
        return ingest(in, header.num_classes);
    } catch (const InvalidInput& e) {
        throw InvalidInput(dataset.string() + ": " + e.what());
    }
}

std::string record_json(const SnapshotExample& example) {
    json j;
    j["id"] = example.id;
    if (example.features) j["features"] = *example.features;
    j["weak_probs"] = dist_json(example.weak_pred);
    j["labels"] = example.labels;
    if (example.p_star) j["p_star"] = dist_json(*example.p_star);
    return j.dump();
}

void write_dataset(const std::filesystem::path& dataset, std::span<const SnapshotExample> examples,
                   const DatasetHeader& header) {
    json h{{"format", kDatasetFormat}, {"version", kFormatVersion}, {"num_classes", header.num_classes}};
    if (!header.class_names.empty()) h["class_names"] = header.class_names;
    write_file(header_path(dataset), h.dump(2) + "\n");

    std::ofstream out(dataset);
    if (!out) throw InvalidInput("cannot write dataset " + dataset.string());
    for (const auto& ex : examples) {
        if (ex.num_classes() != header.num_classes) throw InvalidInput("example class count differs from header");
        out << record_json(ex) << '\n';
    }
    if (!out) throw InvalidInput("failed writing dataset " + dataset.string());
}

std::string loss_to_json(const LossSpec& loss) {
    json params = json::object();
    switch (loss.kind) {
        case LossKind::CrossEntropy: params["epsilon"] = loss.epsilon; break;
        case LossKind::WeightedFpFn:
            params["c_fp"] = loss.c_fp;
            params["c_fn"] = loss.c_fn;
            break;
        case LossKind::AsymmetricClassPenalty: params["gamma"] = loss.gamma; break;
        default: break;
    }
    return json{{"kind", loss.name()}, {"params", params}}.dump();
}

LossSpec loss_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception&) {
        throw InvalidInput("loss spec is not valid JSON");
    }
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw InvalidInput("loss spec needs a kind");
    LossSpec loss = parse_loss(j["kind"].get<std::string>());
    const json params = j.value("params", json::object());
    try {
        loss.epsilon = params.value("epsilon", loss.epsilon);
        loss.c_fp = params.value("c_fp", loss.c_fp);
        loss.c_fn = params.value("c_fn", loss.c_fn);
        loss.gamma = params.value("gamma", loss.gamma);
    } catch (const json::exception&) {
        throw InvalidInput("loss parameters must be numbers");
    }
    loss.validate();
    return loss;
}

std::string model_to_json(const CalibratedRouterModel& model) {
    const auto& part = model.partition();
    json j;
    j["format"] = kModelFormat;
    j["version"] = kFormatVersion;
    j["num_classes"] = model.num_classes();
    j["recalibrated"] = model.recalibrated();
    j["partition"] = {{"kind", to_string(part.kind())},
                      {"buckets", part.buckets()},
                      {"feature_index", part.feature_index()},
                      {"edges", part.edges()},
                      {"level_sets", part.level_sets()}};
    json bins = json::array();
    for (const auto& [bin, mixture] : model.mixtures()) {
        json b{{"bin", bin.str()}, {"entries", mixture_json(mixture)}};
        const auto c = model.centroids().find(bin);
        if (c != model.centroids().end()) b["centroid"] = dist_json(c->second);
        bins.push_back(std::move(b));
    }
    j["bins"] = std::move(bins);
    j["global"] = mixture_json(model.global_mixture());
    if (model.global_centroid()) j["global_centroid"] = dist_json(*model.global_centroid());
    return j.dump();
}

CalibratedRouterModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("model file is not valid JSON: ") + e.what());
    }
    check_format(j, kModelFormat, "model file");
    try {
        const auto& p = j.at("partition");
        auto partition = PartitionSpec::from_parts(
            parse_partition_kind(p.at("kind").get<std::string>()), p.at("buckets").get<std::size_t>(),
            j.at("num_classes").get<std::size_t>(), p.at("feature_index").get<std::size_t>(),
            p.at("edges").get<std::vector<std::vector<double>>>(),
            p.at("level_sets").get<std::vector<std::vector<double>>>());
        std::map<BinId, TaggedMixture> mixtures;
        std::map<BinId, LabelDistribution> centroids;
        for (const auto& b : j.at("bins")) {
            const BinId bin = BinId::parse(b.at("bin").get<std::string>());
            mixtures.emplace(bin, mixture_from(b.at("entries")));
            if (b.contains("centroid")) centroids.emplace(bin, dist_from(b["centroid"]));
        }
        std::optional<LabelDistribution> global_centroid;
        if (j.contains("global_centroid")) global_centroid = dist_from(j["global_centroid"]);
        return CalibratedRouterModel::from_parts(std::move(partition), std::move(mixtures),
                                                 mixture_from(j.at("global")), j.at("recalibrated").get<bool>(),
                                                 std::move(centroids), std::move(global_centroid));
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed model file: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const CalibratedRouterModel& model) {
    write_file(path, model_to_json(model) + "\n");
}

CalibratedRouterModel load_model(const std::filesystem::path& path) { return model_from_json(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << contents;
    if (!out) throw InvalidInput("failed writing " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::map<std::string, double> read_scores_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open scores file " + path.string());
    std::map<std::string, double> scores;
    std::string line;
    std::size_t line_number = 0;
    bool first_row = true;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const bool header_allowed = std::exchange(first_row, false);
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) record_error(line_number, "score", "expected 'id,score'");
        const std::string id = line.substr(0, comma);
        const std::string value = line.substr(comma + 1);
        double score = 0.0;
        try {
            std::size_t used = 0;
            score = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            if (header_allowed) continue;
            record_error(line_number, "score", "not a number: '" + value + "'");
        }
        if (!scores.emplace(id, score).second) record_error(line_number, "id", "duplicate id '" + id + "'");
    }
    return scores;
}

}  // namespace hocroute::io
