#include "visa/render.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace visa::render {

namespace {

const cv::Scalar kGold{0, 200, 0};   // green
const cv::Scalar kPred{0, 0, 255};   // red
const cv::Scalar kText{20, 20, 20};

void draw_box(cv::Mat& img, const geom::BBox& b, const cv::Scalar& color) {
    cv::rectangle(img,
                  cv::Point(static_cast<int>(b.x1), static_cast<int>(b.y1)),
                  cv::Point(static_cast<int>(b.x2) - 1, static_cast<int>(b.y2) - 1),
                  color, 3);
}

std::string join_answers(const textmatch::AnswerSet& answers) {
    std::string out;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (i) out += " | ";
        out += answers[i];
    }
    return out;
}

}  // namespace

std::filesystem::path render_result(const corpus::AttributionExample& ex,
                                    const attrgen::ModelOutput& out,
                                    const corpus::Dataset& ds,
                                    const retrieval::CandidateSet* cands,
                                    const evaluate::ExampleScore& score,
                                    const std::filesystem::path& out_path,
                                    const RenderOptions& opts) {
    // Prediction lands on the predicted candidate in multi mode; the gold
    // box is always drawn on the gold document. When they differ we render
    // the gold document (where the evidence actually is).
    const auto& doc = ds.doc(ex.gold_doc_id);
    cv::Mat src = cv::imread((ds.root / doc.image_path).string());
    if (src.empty()) {
        throw ValidationError("cannot read image for " + doc.doc_id);
    }
    cv::Mat canvas(src.rows + opts.caption_height, src.cols, src.type(),
                   cv::Scalar(245, 245, 245));
    src.copyTo(canvas(cv::Rect(0, 0, src.cols, src.rows)));

    draw_box(canvas, ex.gold_bbox, kGold);

    const bool pred_on_gold_doc =
        !cands || (out.evidence_index && cands->gold_slot &&
                   *out.evidence_index == *cands->gold_slot);
    if (out.bbox && pred_on_gold_doc) {
        draw_box(canvas, *out.bbox, kPred);
    }

    std::ostringstream caption;
    caption << "Q: " << ex.query << "  A: " << join_answers(ex.answers);
    std::ostringstream caption2;
    if (out.kind == attrgen::OutputKind::no_answer) {
        caption2 << "no prediction (model abstained)";
    } else if (!out.bbox) {
        caption2 << "no prediction";
    } else {
        caption2 << "IoU " << std::fixed << std::setprecision(2)
                 << (score.iou ? *score.iou : 0.0);
        if (score.triage != evaluate::ErrorType::none) {
            caption2 << "  triage: " << evaluate::to_string(score.triage);
        }
    }
    cv::putText(canvas, caption.str(), cv::Point(8, src.rows + 26),
                cv::FONT_HERSHEY_SIMPLEX, 0.55, kText, 1, cv::LINE_AA);
    cv::putText(canvas, caption2.str(), cv::Point(8, src.rows + 54),
                cv::FONT_HERSHEY_SIMPLEX, 0.55, kText, 1, cv::LINE_AA);

    std::filesystem::create_directories(out_path.parent_path());
    cv::imwrite(out_path.string(), canvas);
    return out_path;
}

std::vector<GalleryEntry> render_gallery(
    const std::vector<attrgen::BatchResult>& results,
    const std::vector<evaluate::ExampleScore>& scores, const corpus::Dataset& ds,
    const std::map<std::string, retrieval::CandidateSet>& cands_by_id,
    const std::filesystem::path& out_dir, const RenderOptions& opts) {
    std::map<std::string, const attrgen::BatchResult*> by_id;
    for (const auto& r : results) by_id[r.example_id] = &r;
    std::map<std::string, const corpus::AttributionExample*> ex_by_id;
    for (const auto& ex : ds.examples) ex_by_id[ex.example_id] = &ex;

    std::vector<GalleryEntry> entries;
    for (const auto& s : scores) {
        if (s.bbx_correct || !s.gold_present) continue;
        auto rit = by_id.find(s.example_id);
        auto eit = ex_by_id.find(s.example_id);
        if (rit == by_id.end() || eit == ex_by_id.end()) continue;

        const retrieval::CandidateSet* cands = nullptr;
        if (auto cit = cands_by_id.find(s.example_id); cit != cands_by_id.end()) {
            cands = &cit->second;
        }
        const auto group = evaluate::to_string(s.triage);
        const auto path = out_dir / group / (s.example_id + ".png");
        render_result(*eit->second, rit->second->output, ds, cands, s, path, opts);
        entries.push_back({path.string(), s.example_id, s.triage});
    }

    std::ofstream manifest(out_dir / "gallery.jsonl");
    for (const auto& e : entries) {
        manifest << nlohmann::json{{"file", e.file},
                                   {"example_id", e.example_id},
                                   {"triage", evaluate::to_string(e.triage)}}
                        .dump()
                 << "\n";
    }
    return entries;
}

}  // namespace visa::render
