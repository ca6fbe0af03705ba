#include "visa/qaforge.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include <opencv2/imgcodecs.hpp>

#include "visa/rng.hpp"

namespace visa::qaforge {

cv::Mat overlay_bbox(const cv::Mat& image, const geom::BBox& bbox,
                     const OverlayStyle& style) {
    const int x1 = static_cast<int>(std::lround(bbox.x1));
    const int y1 = static_cast<int>(std::lround(bbox.y1));
    const int x2 = static_cast<int>(std::lround(bbox.x2));
    const int y2 = static_cast<int>(std::lround(bbox.y2));
    if (x1 < 0 || y1 < 0 || x2 > image.cols || y2 > image.rows) {
        throw ContainmentError("overlay bbox out of image bounds");
    }
    cv::Mat out = image.clone();
    const int t = std::min({style.stroke, x2 - x1, y2 - y1});
    // Four bands drawn inward from each edge; keeps dimensions unchanged.
    out(cv::Rect(x1, y1, x2 - x1, t)) = style.color;                 // top
    out(cv::Rect(x1, y2 - t, x2 - x1, t)) = style.color;             // bottom
    out(cv::Rect(x1, y1, t, y2 - y1)) = style.color;                 // left
    out(cv::Rect(x2 - t, y1, t, y2 - y1)) = style.color;             // right
    return out;
}

const std::string& synthesis_system_prompt() {
    static const std::string prompt =
        "Ask a question that can be specifically answered by the content in the red "
        "bounding box area and give a short answer. The question can be a wh- "
        "question, a yes/no question, or a how question, that can be answered in a "
        "few words.\n"
        "Output format:\n"
        "\n"
        "Question: <question>\n"
        "Short Answer: <short answer>\n"
        "\n"
        "Or simply return `Empty' if the bounding box area is not visible or "
        "informative.";
    return prompt;
}

chat::ChatRequest build_synthesis_prompt(const std::string& overlaid_image_path) {
    chat::ChatRequest req;
    req.system = synthesis_system_prompt();
    req.user.push_back(chat::Segment::make_image(overlaid_image_path));
    return req;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_empty_sentinel(const std::string& text) {
    std::string t = trim(text);
    // The sentinel sometimes arrives quoted: `Empty', "Empty", Empty.
    while (!t.empty() && (t.front() == '`' || t.front() == '\'' || t.front() == '"')) {
        t.erase(t.begin());
    }
    while (!t.empty() && (t.back() == '\'' || t.back() == '"' || t.back() == '.')) {
        t.pop_back();
    }
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return t == "empty";
}

}  // namespace

SynthesisResult parse_synthesis_output(const std::string& text) {
    if (is_empty_sentinel(text)) return {};

    static const std::regex re(
        "Question:\\s*([^\\n]+)\\n+\\s*Short\\s+Answer:\\s*([^\\n]+)",
        std::regex::icase);
    std::smatch m;
    if (!std::regex_search(text, m, re)) {
        throw ValidationError("unparseable synthesis output: " + trim(text).substr(0, 80));
    }
    SynthesisResult r;
    r.empty = false;
    r.question = trim(m[1].str());
    r.short_answer = trim(m[2].str());
    if (r.question.empty() || r.short_answer.empty()) {
        throw ValidationError("empty question or answer in synthesis output");
    }
    return r;
}

std::optional<corpus::AttributionExample> synthesize_example(
    const corpus::DocumentImage& doc, const std::filesystem::path& corpus_root,
    const corpus::LayoutRecord& target, chat::InferenceClient& client,
    const SynthesisConfig& cfg, std::optional<int> word_count) {
    if (target.element_class == corpus::ElementClass::text && word_count &&
        *word_count < cfg.min_passage_words) {
        return std::nullopt;
    }

    const auto src = corpus_root / doc.image_path;
    cv::Mat image = cv::imread(src.string());
    if (image.empty()) throw ValidationError("cannot read image: " + src.string());
    cv::Mat overlaid = overlay_bbox(image, target.element_bbox, cfg.style);

    std::filesystem::create_directories(cfg.work_dir);
    const std::string example_id =
        doc.doc_id + "-" +
        std::to_string(fnv1a64(doc.doc_id + "|" +
                               std::to_string(static_cast<long long>(target.element_bbox.x1)) + "," +
                               std::to_string(static_cast<long long>(target.element_bbox.y1)) + "," +
                               std::to_string(static_cast<long long>(target.element_bbox.x2)) + "," +
                               std::to_string(static_cast<long long>(target.element_bbox.y2))));
    const auto overlaid_path = cfg.work_dir / (example_id + ".png");
    cv::imwrite(overlaid_path.string(), overlaid);

    const std::string raw = client.generate(build_synthesis_prompt(overlaid_path.string()));

    SynthesisResult parsed;
    try {
        parsed = parse_synthesis_output(raw);
    } catch (const ValidationError&) {
        return std::nullopt;  // logged upstream; sample skipped
    }
    if (parsed.empty) return std::nullopt;

    corpus::AttributionExample ex;
    ex.example_id = example_id;
    ex.query = parsed.question;
    ex.answers = {parsed.short_answer};
    ex.gold_doc_id = doc.doc_id;
    ex.gold_bbox = target.element_bbox;  // the original, non-overlaid target
    ex.category = corpus::assign_category(target.element_class, target.element_bbox,
                                          doc.dims(), cfg.multi_page);
    ex.split = corpus::Split::train;
    return ex;
}

}  // namespace visa::qaforge
