#include "foresee/stream_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "foresee/errors.hpp"

namespace foresee {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kFormatName = "foresee-stream";
constexpr int kFormatVersion = 1;
constexpr const char* kCsvHeader = "hour,region,channel,pred,actual";

std::string day_file_name(std::int64_t index)
{
    char buf[48];
    std::snprintf(buf, sizeof(buf), "day_%06lld.csv", static_cast<long long>(index));
    return buf;
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out)
{
    text = trim(text);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size() && !text.empty();
}

[[noreturn]] void parse_failure(const fs::path& file, std::size_t line, const std::string& what)
{
    std::ostringstream os;
    os << file.string() << ':' << line << ": " << what;
    throw DataError(os.str());
}

json read_json_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

struct DayBlock {
    std::vector<double> pred;
    std::vector<double> actual;
};

DayBlock read_day_csv(const fs::path& file, const TensorShape& shape, std::span<const std::string> region_ids)
{
    std::ifstream in(file);
    if (!in) {
        throw DataError("cannot open day file " + file.string());
    }
    DayBlock block;
    block.pred.reserve(shape.size());
    block.actual.reserve(shape.size());

    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty()) {
            continue;
        }
        if (!header_seen) {
            if (text != kCsvHeader) {
                parse_failure(file, line_no, std::string("expected header '") + kCsvHeader + "'");
            }
            header_seen = true;
            continue;
        }
        const auto fields = split(text, ',');
        if (fields.size() != 5) {
            parse_failure(file, line_no, "expected 5 fields, found " + std::to_string(fields.size()));
        }
        const std::size_t flat = block.pred.size();
        if (flat >= shape.size()) {
            parse_failure(file, line_no, "more rows than the declared shape " + shape.str());
        }
        const std::size_t want_hour = flat / (shape.regions * shape.channels);
        const std::size_t want_region = (flat / shape.channels) % shape.regions;
        const std::size_t want_channel = flat % shape.channels;
        std::size_t hour = 0;
        std::size_t channel = 0;
        if (!parse_number(fields[0], hour) || !parse_number(fields[2], channel)) {
            parse_failure(file, line_no, "hour and channel must be non-negative integers");
        }
        if (hour != want_hour || trim(fields[1]) != region_ids[want_region] || channel != want_channel) {
            std::ostringstream os;
            os << "row out of (hour, region, channel) order; expected (" << want_hour << ", " << region_ids[want_region]
               << ", " << want_channel << ")";
            parse_failure(file, line_no, os.str());
        }
        double pred = 0.0;
        double actual = 0.0;
        if (!parse_number(fields[3], pred) || !parse_number(fields[4], actual)) {
            parse_failure(file, line_no, "pred and actual must be real numbers");
        }
        if (!std::isfinite(pred) || !std::isfinite(actual)) {
            parse_failure(file, line_no, "non-finite value");
        }
        block.pred.push_back(pred);
        block.actual.push_back(actual);
    }
    if (!header_seen) {
        parse_failure(file, line_no, "empty day file");
    }
    if (block.pred.size() != shape.size()) {
        parse_failure(file, line_no,
                      "found " + std::to_string(block.pred.size()) + " rows, shape " + shape.str() + " needs " +
                          std::to_string(shape.size()));
    }
    return block;
}

DayTensor keep_regions(const DayTensor& t, std::span<const std::size_t> kept)
{
    const auto& s = t.shape();
    TensorShape out_shape{s.hours, kept.size(), s.channels};
    std::vector<double> out;
    out.reserve(out_shape.size());
    for (std::size_t h = 0; h < s.hours; ++h) {
        for (std::size_t r : kept) {
            for (std::size_t c = 0; c < s.channels; ++c) {
                out.push_back(t[t.index(h, r, c)]);
            }
        }
    }
    return DayTensor(out_shape, std::move(out));
}

json tensor_to_json(const DayTensor& t)
{
    return json{{"shape", {t.shape().hours, t.shape().regions, t.shape().channels}}, {"values", t.values()}};
}

DayTensor tensor_from_json(const json& j)
{
    const auto dims = j.at("shape").get<std::vector<std::size_t>>();
    if (dims.size() != 3) {
        throw DataError("snapshot: tensor shape needs three dimensions");
    }
    return DayTensor(TensorShape{dims[0], dims[1], dims[2]}, j.at("values").get<std::vector<double>>());
}

const char* reduction_name(LossReduction r)
{
    return r == LossReduction::kMean ? "mean" : "sum";
}

const char* padding_name(Padding p)
{
    return p == Padding::kZero ? "zero" : "circular";
}

const char* order_name(OgdOrder o)
{
    return o == OgdOrder::kLiteral ? "literal" : "params_first";
}

} // namespace

std::string format_double(double value)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::vector<std::string> default_region_ids(std::size_t regions)
{
    std::vector<std::string> ids;
    ids.reserve(regions);
    for (std::size_t r = 0; r < regions; ++r) {
        ids.push_back("r" + std::to_string(r));
    }
    return ids;
}

void save_stream(const fs::path& dir, std::span<const DayRecord> records, std::span<const std::string> region_ids,
                 std::optional<std::string> timestamp)
{
    validate_stream(records);
    const TensorShape shape = records.front().base_pred.shape();
    if (region_ids.size() != shape.regions) {
        throw ShapeError("save_stream: " + std::to_string(region_ids.size()) + " region ids for " +
                         std::to_string(shape.regions) + " regions");
    }
    fs::create_directories(dir);

    json manifest;
    manifest["format"] = kFormatName;
    manifest["version"] = kFormatVersion;
    if (timestamp) {
        manifest["generated_at"] = *timestamp;
    }
    manifest["shape"] = {{"hours", shape.hours}, {"regions", shape.regions}, {"channels", shape.channels}};
    manifest["region_ids"] = std::vector<std::string>(region_ids.begin(), region_ids.end());
    json days = json::array();
    for (const auto& rec : records) {
        const std::string name = day_file_name(rec.day_index);
        days.push_back({{"index", rec.day_index}, {"file", name}});

        std::ofstream out(dir / name);
        if (!out) {
            throw DataError("cannot write " + (dir / name).string());
        }
        out << kCsvHeader << '\n';
        for (std::size_t h = 0; h < shape.hours; ++h) {
            for (std::size_t r = 0; r < shape.regions; ++r) {
                for (std::size_t c = 0; c < shape.channels; ++c) {
                    const std::size_t i = rec.base_pred.index(h, r, c);
                    out << h << ',' << region_ids[r] << ',' << c << ',' << format_double(rec.base_pred[i]) << ','
                        << format_double(rec.actual[i]) << '\n';
                }
            }
        }
    }
    manifest["days"] = std::move(days);
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
}

LoadedStream load_stream(const fs::path& dir, const LoadOptions& options)
{
    const fs::path manifest_path = dir / "manifest.json";
    const json manifest = read_json_file(manifest_path);

    TensorShape shape;
    std::vector<std::string> region_ids;
    try {
        if (manifest.at("format").get<std::string>() != kFormatName) {
            throw DataError(manifest_path.string() + ": unknown format");
        }
        const auto& s = manifest.at("shape");
        shape = TensorShape{s.at("hours").get<std::size_t>(), s.at("regions").get<std::size_t>(),
                            s.at("channels").get<std::size_t>()};
        region_ids = manifest.at("region_ids").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError(manifest_path.string() + ": " + e.what());
    }
    shape.validate();
    if (region_ids.size() != shape.regions) {
        throw DataError(manifest_path.string() + ": region_ids lists " + std::to_string(region_ids.size()) +
                        " ids for " + std::to_string(shape.regions) + " regions");
    }

    LoadedStream loaded;
    std::optional<std::int64_t> previous;
    const auto& days = manifest.at("days");
    for (const auto& entry : days) {
        std::int64_t index = 0;
        std::string file;
        try {
            index = entry.at("index").get<std::int64_t>();
            file = entry.at("file").get<std::string>();
        } catch (const json::exception& e) {
            throw DataError(manifest_path.string() + ": " + e.what());
        }
        if (previous && index <= *previous) {
            throw DataError("stream order: day " + std::to_string(*previous) + " is listed before day " +
                            std::to_string(index));
        }
        previous = index;
        auto block = read_day_csv(dir / file, shape, region_ids);
        loaded.records.push_back(
            DayRecord{index, DayTensor(shape, std::move(block.pred)), DayTensor(shape, std::move(block.actual))});
    }
    if (loaded.records.empty()) {
        throw DataError(manifest_path.string() + ": stream lists no days");
    }

    if (!options.region_floor) {
        loaded.region_ids = std::move(region_ids);
        return loaded;
    }

    std::vector<double> demand(shape.regions, 0.0);
    for (const auto& rec : loaded.records) {
        for (std::size_t h = 0; h < shape.hours; ++h) {
            for (std::size_t r = 0; r < shape.regions; ++r) {
                for (std::size_t c = 0; c < shape.channels; ++c) {
                    demand[r] += rec.actual[rec.actual.index(h, r, c)];
                }
            }
        }
    }
    const double per_region = static_cast<double>(loaded.records.size() * shape.hours * shape.channels);
    std::vector<std::size_t> kept;
    for (std::size_t r = 0; r < shape.regions; ++r) {
        if (demand[r] / per_region < *options.region_floor) {
            loaded.dropped_regions.push_back(region_ids[r]);
        } else {
            kept.push_back(r);
            loaded.region_ids.push_back(region_ids[r]);
        }
    }
    if (kept.empty()) {
        throw DataError("region floor removed every region");
    }
    if (kept.size() != shape.regions) {
        for (auto& rec : loaded.records) {
            rec.base_pred = keep_regions(rec.base_pred, kept);
            rec.actual = keep_regions(rec.actual, kept);
        }
    }
    return loaded;
}

RegionGraph load_graph(const fs::path& path, std::span<const std::string> region_ids,
                       std::span<const std::string> dropped_ids, std::vector<std::string>* warnings)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open graph file " + path.string());
    }
    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < region_ids.size(); ++i) {
        index.emplace(region_ids[i], i);
    }
    auto is_dropped = [&](std::string_view id) {
        return std::find(dropped_ids.begin(), dropped_ids.end(), id) != dropped_ids.end();
    };

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') {
            continue;
        }
        std::istringstream fields{std::string(text)};
        std::string a;
        std::string b;
        std::string extra;
        if (!(fields >> a >> b) || (fields >> extra)) {
            parse_failure(path, line_no, "expected two region ids");
        }
        if (is_dropped(a) || is_dropped(b)) {
            continue;
        }
        const auto ia = index.find(a);
        const auto ib = index.find(b);
        if (ia == index.end() || ib == index.end()) {
            parse_failure(path, line_no, "unknown region id '" + (ia == index.end() ? a : b) + "'");
        }
        edges.emplace_back(ia->second, ib->second);
    }
    std::size_t loops = 0;
    auto graph = RegionGraph::from_edges(region_ids.size(), edges, &loops);
    if (loops > 0 && warnings != nullptr) {
        warnings->push_back(path.string() + ": ignored " + std::to_string(loops) + " self-loop edge(s)");
    }
    return graph;
}

void save_graph(const fs::path& path, const RegionGraph& graph, std::span<const std::string> region_ids)
{
    if (region_ids.size() != graph.size()) {
        throw ShapeError("save_graph: region id count differs from graph size");
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << "# region adjacency, one undirected edge per line\n";
    for (std::size_t i = 0; i < graph.size(); ++i) {
        for (std::size_t j : graph.neighbors(i)) {
            if (i < j) {
                out << region_ids[i] << ' ' << region_ids[j] << '\n';
            }
        }
    }
}

void save_engine_state(std::ostream& out, const EngineState& state)
{
    json j;
    const auto& cfg = state.config;
    j["config"] = {{"alphas", cfg.alphas},
                   {"eta", cfg.eta},
                   {"loss_reduction", reduction_name(cfg.reduction)},
                   {"smoothing_enabled", cfg.smoothing_enabled},
                   {"ogd_enabled", cfg.ogd_enabled},
                   {"ogd_order", order_name(cfg.ogd_order)},
                   {"gamma_init", cfg.smoothing.gamma},
                   {"kernel_init", cfg.smoothing.kernel}};
    j["alphas"] = json::array();
    j["deltas"] = json::array();
    for (const auto& expert : state.ensemble.experts) {
        j["alphas"].push_back(expert.alpha);
        j["deltas"].push_back(tensor_to_json(expert.delta));
    }
    j["weights"] = state.ensemble.weights;
    j["eta"] = state.ensemble.eta;
    j["smoothing"] = {{"gamma", state.smooth_params.gamma},
                      {"kernel", state.smooth_params.kernel},
                      {"eta_gamma", state.smooth_params.eta_gamma},
                      {"eta_kernel", state.smooth_params.eta_kernel},
                      {"padding", padding_name(state.smooth_params.padding)}};
    j["day_counter"] = state.day_counter;
    j["last_day_index"] = state.last_day_index ? json(*state.last_day_index) : json(nullptr);
    j["cached_raw_err"] = state.cached_raw_err ? tensor_to_json(*state.cached_raw_err) : json(nullptr);
    j["prev_deltas"] = json::array();
    for (const auto& d : state.prev_deltas) {
        j["prev_deltas"].push_back(tensor_to_json(d));
    }
    j["last_expert_losses"] = state.last_expert_losses;
    j["last_loss"] = state.last_loss;
    out << j.dump();
}

EngineState load_engine_state(std::istream& in, std::shared_ptr<const RegionGraph> graph)
{
    try {
        const json j = json::parse(in);
        const auto& c = j.at("config");
        EngineConfig cfg;
        cfg.alphas = c.at("alphas").get<std::vector<double>>();
        cfg.eta = c.at("eta").get<double>();
        cfg.reduction = c.at("loss_reduction").get<std::string>() == "sum" ? LossReduction::kSum : LossReduction::kMean;
        cfg.smoothing_enabled = c.at("smoothing_enabled").get<bool>();
        cfg.ogd_enabled = c.at("ogd_enabled").get<bool>();
        cfg.ogd_order =
            c.at("ogd_order").get<std::string>() == "params_first" ? OgdOrder::kParamsFirst : OgdOrder::kLiteral;

        const auto& s = j.at("smoothing");
        cfg.smoothing.gamma = c.at("gamma_init").get<double>();
        cfg.smoothing.kernel = c.at("kernel_init").get<std::vector<double>>();
        cfg.smoothing.eta_gamma = s.at("eta_gamma").get<double>();
        cfg.smoothing.eta_kernel = s.at("eta_kernel").get<double>();
        cfg.smoothing.padding = s.at("padding").get<std::string>() == "circular" ? Padding::kCircular : Padding::kZero;

        const auto deltas = j.at("deltas");
        if (deltas.empty()) {
            throw DataError("snapshot: no experts");
        }
        const TensorShape shape = tensor_from_json(deltas.front()).shape();
        EngineState state = init_engine(cfg, shape, std::move(graph));

        const auto alphas = j.at("alphas").get<std::vector<double>>();
        const auto weights = j.at("weights").get<std::vector<double>>();
        if (alphas.size() != deltas.size() || weights.size() != deltas.size()) {
            throw DataError("snapshot: alpha, weight and correction counts differ");
        }
        state.ensemble.experts.clear();
        for (std::size_t i = 0; i < alphas.size(); ++i) {
            state.ensemble.experts.push_back(ExpertState{alphas[i], tensor_from_json(deltas[i])});
        }
        state.ensemble.weights = weights;
        state.ensemble.eta = j.at("eta").get<double>();
        state.smooth_params = cfg.smoothing;
        state.smooth_params.gamma = s.at("gamma").get<double>();
        state.smooth_params.kernel = s.at("kernel").get<std::vector<double>>();
        state.day_counter = j.at("day_counter").get<std::int64_t>();
        if (!j.at("last_day_index").is_null()) {
            state.last_day_index = j.at("last_day_index").get<std::int64_t>();
        }
        if (!j.at("cached_raw_err").is_null()) {
            state.cached_raw_err = tensor_from_json(j.at("cached_raw_err"));
        }
        for (const auto& d : j.at("prev_deltas")) {
            state.prev_deltas.push_back(tensor_from_json(d));
        }
        state.last_expert_losses = j.at("last_expert_losses").get<std::vector<double>>();
        state.last_loss = j.at("last_loss").get<double>();
        return state;
    } catch (const json::exception& e) {
        throw DataError(std::string("snapshot: ") + e.what());
    }
}

std::string trace_row_json(const TraceRow& row)
{
    json j;
    j["day"] = row.day_index;
    j["weights"] = row.weights;
    j["gamma"] = row.gamma;
    j["kernel"] = row.kernel;
    j["mae"] = row.mae;
    j["rmse"] = row.rmse;
    j["loss"] = row.loss;
    j["expert_losses"] = row.expert_losses;
    return j.dump();
}

} // namespace foresee
