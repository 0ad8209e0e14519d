#include "sigfeat/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace sigfeat {

namespace {

bool parse_finite_double(std::string_view text, double& out) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (text.empty()) return false;
    double parsed = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, parsed, std::chars_format::general);
    if (ec != std::errc{} || ptr != end || !std::isfinite(parsed)) return false;
    out = parsed;
    return true;
}

std::string sidecar_path(const std::string& csv_path) {
    fs::path p(csv_path);
    p.replace_extension("");
    return p.string() + ".meta.json";
}

json load_json_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw DataError(std::string("cannot open ") + what + ": " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed JSON in ") + path + ": " + e.what());
    }
    return j;
}

std::vector<double> parse_sample_row(const std::string& line, std::size_t row_no, std::size_t skip_fields) {
    std::vector<double> values;
    std::size_t field = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            std::string_view tok(line.data() + start, i - start);
            if (field >= skip_fields) {
                double v = 0.0;
                if (!parse_finite_double(tok, v))
                    throw DataError("row " + std::to_string(row_no) + ": non-finite or malformed sample '" +
                                    std::string(tok) + "'");
                values.push_back(v);
            }
            ++field;
            start = i + 1;
        }
    }
    return values;
}

SignalDataset load_wide_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);

    json meta = load_json_file(sidecar_path(path), "sidecar");
    if (!meta.contains("sampling_rate_hz") || !meta["sampling_rate_hz"].is_number())
        throw DataError("sidecar missing numeric sampling_rate_hz: " + sidecar_path(path));

    SignalDataset ds;
    ds.sampling_rate_hz = meta["sampling_rate_hz"].get<double>();
    ds.name = meta.value("name", fs::path(path).stem().string());

    std::string line;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty() || line == "\r") continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError("row " + std::to_string(row_no) + ": expected label,samples...");
        double label_val = 0.0;
        if (!parse_finite_double(std::string_view(line.data(), comma), label_val) ||
            (label_val != 0.0 && label_val != 1.0))
            throw DataError("row " + std::to_string(row_no) + ": label must be 0 or 1");
        SignalInstance inst;
        inst.label = static_cast<int>(label_val);
        inst.instance_id = static_cast<std::int64_t>(ds.instances.size());
        inst.samples = parse_sample_row(line, row_no, 1);
        ds.instances.push_back(std::move(inst));
    }
    ds.validate();
    return ds;
}

SignalDataset load_manifest(const std::string& path) {
    json manifest = load_json_file(path, "manifest");
    if (!manifest.contains("instances") || !manifest["instances"].is_array())
        throw DataError("manifest missing 'instances' array: " + path);
    if (!manifest.contains("sampling_rate_hz"))
        throw DataError("manifest missing sampling_rate_hz: " + path);

    SignalDataset ds;
    ds.sampling_rate_hz = manifest["sampling_rate_hz"].get<double>();
    ds.name = manifest.value("name", fs::path(path).parent_path().filename().string());

    fs::path base = fs::path(path).parent_path();
    for (const auto& entry : manifest["instances"]) {
        SignalInstance inst;
        inst.label = entry.at("label").get<int>();
        inst.instance_id = static_cast<std::int64_t>(ds.instances.size());
        fs::path sample_path = base / entry.at("path").get<std::string>();
        std::ifstream in(sample_path);
        if (!in) throw DataError("cannot open instance file: " + sample_path.string());
        std::string line;
        std::size_t row_no = 0;
        while (std::getline(in, line)) {
            ++row_no;
            if (line.empty() || line == "\r") continue;
            double v = 0.0;
            if (!parse_finite_double(line, v))
                throw DataError(sample_path.string() + " row " + std::to_string(row_no) +
                                ": non-finite or malformed sample");
            inst.samples.push_back(v);
        }
        ds.instances.push_back(std::move(inst));
    }
    ds.validate();
    return ds;
}

}  // namespace

std::size_t SignalDataset::count_label(int label) const {
    std::size_t n = 0;
    for (const auto& inst : instances)
        if (inst.label == label) ++n;
    return n;
}

void SignalDataset::validate() const {
    if (instances.empty()) throw DataError("empty dataset");
    if (!(sampling_rate_hz > 0.0)) throw DataError("sampling_rate_hz must be positive");
    std::set<std::int64_t> seen_ids;
    for (const auto& inst : instances) {
        if (inst.label != 0 && inst.label != 1)
            throw DataError("instance " + std::to_string(inst.instance_id) + ": label must be 0 or 1");
        if (inst.samples.size() < 2)
            throw DataError("instance " + std::to_string(inst.instance_id) + ": fewer than 2 samples");
        for (double v : inst.samples)
            if (!std::isfinite(v))
                throw DataError("instance " + std::to_string(inst.instance_id) + ": non-finite sample");
        if (!seen_ids.insert(inst.instance_id).second)
            throw DataError("duplicate instance_id " + std::to_string(inst.instance_id));
    }
    if (count_label(0) == 0 || count_label(1) == 0) throw DataError("empty class: need both labels 0 and 1");
}

std::size_t WindowPlan::window_length_samples(double rate_hz) const {
    return static_cast<std::size_t>(std::floor(window_size_s * rate_hz));
}

std::size_t WindowPlan::hop_samples(double rate_hz) const {
    std::size_t len = window_length_samples(rate_hz);
    auto hop = static_cast<std::size_t>(std::llround(static_cast<double>(len) * (1.0 - overlap_fraction)));
    return std::max<std::size_t>(hop, 1);
}

SignalDataset load_dataset(const std::string& path, DatasetFormat format) {
    switch (format) {
        case DatasetFormat::WideCsv: return load_wide_csv(path);
        case DatasetFormat::Manifest: return load_manifest(path);
    }
    throw ConfigError("unknown dataset format");
}

void write_dataset(const SignalDataset& ds, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw DataError("cannot write dataset file: " + csv_path);
    out.precision(17);
    for (const auto& inst : ds.instances) {
        out << inst.label;
        for (double v : inst.samples) out << ',' << v;
        out << '\n';
    }
    out.close();

    json meta;
    meta["sampling_rate_hz"] = ds.sampling_rate_hz;
    meta["name"] = ds.name;
    std::ofstream mout(sidecar_path(csv_path));
    if (!mout) throw DataError("cannot write sidecar: " + sidecar_path(csv_path));
    mout << meta.dump(2) << '\n';
}

std::vector<WindowedSegment> window_instance(const SignalInstance& instance, const WindowPlan& plan,
                                             double rate_hz) {
    std::size_t len = plan.window_length_samples(rate_hz);
    if (len < 4) throw ConfigError("window shorter than 4 samples");
    if (!(plan.overlap_fraction >= 0.0 && plan.overlap_fraction < 1.0))
        throw ConfigError("overlap_fraction must be in [0,1)");
    if (len > instance.samples.size())
        throw DataError("window longer than signal (instance " + std::to_string(instance.instance_id) +
                        ": " + std::to_string(instance.samples.size()) + " < " + std::to_string(len) + ")");
    std::size_t hop = plan.hop_samples(rate_hz);

    std::vector<WindowedSegment> segments;
    std::size_t index = 0;
    for (std::size_t start = 0; start + len <= instance.samples.size(); start += hop) {
        WindowedSegment seg;
        seg.instance_id = instance.instance_id;
        seg.window_index = index++;
        seg.start_sample = start;
        seg.samples.assign(instance.samples.begin() + static_cast<std::ptrdiff_t>(start),
                           instance.samples.begin() + static_cast<std::ptrdiff_t>(start + len));
        segments.push_back(std::move(seg));
    }
    return segments;
}

SignalDataset synthesize_dataset(const SynthesisSpec& spec, std::uint64_t seed) {
    if (spec.classes.empty()) throw ConfigError("synthesis spec has no classes");
    if (spec.instances_per_class == 0 || spec.samples_per_instance < 2)
        throw ConfigError("synthesis spec needs instances_per_class >= 1 and >= 2 samples");
    if (!(spec.sampling_rate_hz > 0.0)) throw ConfigError("synthesis sampling rate must be positive");
    double nyquist = spec.sampling_rate_hz / 2.0;
    for (const auto& cls : spec.classes)
        for (const auto& tone : cls.tones)
            if (tone.freq_hz >= nyquist)
                throw ConfigError("tone frequency " + std::to_string(tone.freq_hz) +
                                  " Hz is at or above Nyquist (" + std::to_string(nyquist) + " Hz)");

    SignalDataset ds;
    ds.sampling_rate_hz = spec.sampling_rate_hz;
    ds.name = spec.name;
    const double two_pi = 6.283185307179586476925286766559;
    std::int64_t next_id = 0;
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        const auto& cls = spec.classes[c];
        for (std::size_t k = 0; k < spec.instances_per_class; ++k) {
            // one independent stream per instance: insertion order cannot matter
            Rng rng(derive_seed(seed, (static_cast<std::uint64_t>(c) << 32) | k));
            double phase = rng.next_double() * two_pi;
            SignalInstance inst;
            inst.label = cls.label;
            inst.instance_id = next_id++;
            inst.samples.resize(spec.samples_per_instance);
            for (std::size_t n = 0; n < spec.samples_per_instance; ++n) {
                double t = static_cast<double>(n) / spec.sampling_rate_hz;
                double v = 0.0;
                for (const auto& tone : cls.tones)
                    v += tone.amplitude * std::sin(two_pi * tone.freq_hz * t + phase);
                if (cls.noise_sigma > 0.0) v += cls.noise_sigma * rng.next_gaussian();
                inst.samples[n] = v;
            }
            ds.instances.push_back(std::move(inst));
        }
    }
    ds.validate();
    return ds;
}

}  // namespace sigfeat
