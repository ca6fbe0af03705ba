#include "visa/attrgen.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <thread>

namespace visa::attrgen {

using nlohmann::json;

namespace {

constexpr const char* kSingleSystem =
    "Given a document image, your task is to answer the question and locate the "
    "source of the answer via a bounding box.";

constexpr const char* kMultiSystem =
    "Given document images, your task is to answer the question and locate the "
    "source of the answer via a bounding box.";

std::string image_size_line(const geom::ImageDims& dims) {
    std::ostringstream os;
    os << " Image Size: (" << dims.width << ", " << dims.height << ")\n";
    return os.str();
}

std::string coord(double v, CoordMode mode) {
    std::ostringstream os;
    if (mode == CoordMode::absolute) {
        os << static_cast<long long>(std::llround(v));
    } else {
        os << std::fixed << std::setprecision(4) << v;
    }
    return os.str();
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool is_no_answer(const std::string& text) {
    std::string t = lower(trim(text));
    if (!t.empty() && t.back() == '.') t.pop_back();
    return t == "no answer";
}

// Matches a line-anchored field label and captures the rest of the line.
std::optional<std::string> field_after(const std::string& text, const std::string& label) {
    const std::regex re("(?:^|\\n)\\s*" + label + ":\\s*([^\\n]*)",
                        std::regex::icase);
    std::smatch m;
    if (!std::regex_search(text, m, re)) return std::nullopt;
    return trim(m[1].str());
}

}  // namespace

std::string format_bbox(const geom::BBox& b, CoordMode mode, const geom::ImageDims& dims) {
    geom::BBox v = b;
    if (mode == CoordMode::normalized) {
        const auto n = geom::normalize(b, dims);
        v = {n.x1, n.y1, n.x2, n.y2};
    }
    std::ostringstream os;
    os << "[(" << coord(v.x1, mode) << ", " << coord(v.y1, mode) << "), ("
       << coord(v.x2, mode) << ", " << coord(v.y2, mode) << ")]";
    return os.str();
}

chat::ChatRequest build_single_prompt(const std::string& query,
                                      const corpus::DocumentImage& doc,
                                      const std::filesystem::path& corpus_root) {
    chat::ChatRequest req;
    req.system = kSingleSystem;
    req.user.push_back(chat::Segment::make_image((corpus_root / doc.image_path).string()));
    req.user.push_back(chat::Segment::make_text(image_size_line(doc.dims())));
    req.user.push_back(chat::Segment::make_text("Question: " + query));
    return req;
}

chat::ChatRequest build_multi_prompt(const std::string& query,
                                     const retrieval::CandidateSet& cands,
                                     const corpus::Dataset& ds) {
    chat::ChatRequest req;
    req.system = kMultiSystem;
    for (const auto& doc_id : cands.docs) {
        const auto& doc = ds.doc(doc_id);
        req.user.push_back(chat::Segment::make_image((ds.root / doc.image_path).string()));
        req.user.push_back(chat::Segment::make_text(image_size_line(doc.dims())));
    }
    req.user.push_back(chat::Segment::make_text("Question: " + query));
    return req;
}

ModelOutput parse_model_output(const std::string& text, const ParseOptions& opts,
                               const std::vector<geom::ImageDims>& dims_per_candidate) {
    ModelOutput out;
    if (is_no_answer(text)) {
        out.kind = OutputKind::no_answer;
        return out;
    }

    auto fail = [&](const std::string& why) {
        out.kind = OutputKind::unparseable;
        out.note = why;
        return out;
    };

    const auto answer = field_after(text, "Answer");
    if (!answer || answer->empty()) return fail("missing Answer field");

    int evidence = 1;
    if (opts.mode == Mode::multi) {
        const auto ev = field_after(text, "Evidence\\s+Document");
        if (!ev) return fail("missing Evidence Document field");
        try {
            evidence = std::stoi(*ev);
        } catch (const std::exception&) {
            return fail("non-numeric evidence index: " + *ev);
        }
        if (evidence < 1 || evidence > static_cast<int>(dims_per_candidate.size())) {
            return fail("evidence index out of range: " + *ev);
        }
    }

    const auto bb = field_after(text, "Bounding\\s+Box");
    if (!bb) return fail("missing Bounding Box field");
    // Tolerate bracket/paren variants and optional spaces; take the first
    // four numeric tokens.
    static const std::regex num_re("-?\\d+(?:\\.\\d+)?");
    std::vector<double> nums;
    for (auto it = std::sregex_iterator(bb->begin(), bb->end(), num_re);
         it != std::sregex_iterator() && nums.size() < 4; ++it) {
        nums.push_back(std::stod(it->str()));
    }
    if (nums.size() < 4) return fail("bounding box needs four coordinates: " + *bb);

    const geom::ImageDims dims = dims_per_candidate.at(evidence - 1);
    try {
        geom::BBox box =
            opts.coords == CoordMode::normalized
                ? geom::denormalize({nums[0], nums[1], nums[2], nums[3]}, dims)
                : geom::BBox(nums[0], nums[1], nums[2], nums[3]);
        out.bbox = geom::clip(box, dims);
    } catch (const Error& e) {
        return fail(std::string("invalid bounding box: ") + e.what());
    }

    out.kind = OutputKind::answered;
    out.answer = *answer;
    if (opts.mode == Mode::multi) out.evidence_index = evidence;
    return out;
}

std::string format_target(const corpus::AttributionExample& ex,
                          const retrieval::CandidateSet* cands,
                          const geom::ImageDims& gold_dims, CoordMode coords) {
    if (cands && !cands->has_gold) return "No answer.";
    std::ostringstream os;
    os << "Answer: " << ex.answers.front() << "\n";
    if (cands) os << "Evidence Document: " << *cands->gold_slot << "\n";
    os << "Bounding Box: " << format_bbox(ex.gold_bbox, coords, gold_dims);
    return os.str();
}

std::vector<BatchResult> run_batch(const std::vector<BatchItem>& items,
                                   chat::InferenceClient& client,
                                   const BatchOptions& opts) {
    std::vector<BatchResult> results(items.size());
    chat::RetryingClient retrying(client, opts.max_retries);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size()) break;
            const auto& item = items[i];
            BatchResult r;
            r.example_id = item.example_id;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                r.raw = retrying.generate(item.request);
                r.output = parse_model_output(r.raw, opts.parse, item.dims);
            } catch (const TransportError& e) {
                r.output.kind = OutputKind::unparseable;
                r.output.note = std::string("transport failure: ") + e.what();
            }
            r.latency_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
            results[i] = std::move(r);
        }
    };

    const int n_threads = std::max(1, opts.concurrency);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::sort(results.begin(), results.end(),
              [](const BatchResult& a, const BatchResult& b) {
                  return a.example_id < b.example_id;
              });
    return results;
}

std::vector<BatchResult> replay_batch(const std::vector<BatchItem>& items,
                                      const std::filesystem::path& raw_path,
                                      const ParseOptions& parse) {
    std::ifstream in(raw_path);
    if (!in) throw ValidationError("cannot open raw responses: " + raw_path.string());
    std::map<std::string, std::string> raws;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line);
        raws[j.at("example_id").get<std::string>()] = j.at("raw").get<std::string>();
    }

    std::vector<BatchResult> results;
    results.reserve(items.size());
    for (const auto& item : items) {
        BatchResult r;
        r.example_id = item.example_id;
        auto it = raws.find(item.example_id);
        if (it == raws.end()) {
            r.output.kind = OutputKind::unparseable;
            r.output.note = "no persisted response for example";
        } else {
            r.raw = it->second;
            r.output = parse_model_output(r.raw, parse, item.dims);
        }
        results.push_back(std::move(r));
    }
    std::sort(results.begin(), results.end(),
              [](const BatchResult& a, const BatchResult& b) {
                  return a.example_id < b.example_id;
              });
    return results;
}

void write_raw_responses(const std::vector<BatchResult>& results,
                         const std::filesystem::path& path) {
    std::ofstream out(path);
    for (const auto& r : results) {
        out << json{{"example_id", r.example_id}, {"raw", r.raw}}.dump() << "\n";
    }
}

json result_to_json(const BatchResult& r) {
    json j;
    j["example_id"] = r.example_id;
    switch (r.output.kind) {
        case OutputKind::answered: j["kind"] = "answered"; break;
        case OutputKind::no_answer: j["kind"] = "no_answer"; break;
        case OutputKind::unparseable: j["kind"] = "unparseable"; break;
    }
    if (r.output.answer) j["answer"] = *r.output.answer;
    if (r.output.evidence_index) j["evidence_index"] = *r.output.evidence_index;
    if (r.output.bbox) j["bbox"] = corpus::bbox_to_json(*r.output.bbox);
    j["raw"] = r.raw;
    return j;
}

void write_results(const std::vector<BatchResult>& results,
                   const std::filesystem::path& path) {
    std::ofstream out(path);
    for (const auto& r : results) out << result_to_json(r).dump() << "\n";
}

}  // namespace visa::attrgen
