#include "visa/geom.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace visa::geom {

namespace {

std::string describe(double x1, double y1, double x2, double y2) {
    std::ostringstream os;
    os << "(" << x1 << ", " << y1 << ", " << x2 << ", " << y2 << ")";
    return os.str();
}

}  // namespace

BBox::BBox(double x1_, double y1_, double x2_, double y2_)
    : x1(x1_), y1(y1_), x2(x2_), y2(y2_) {
    if (!(x1 < x2) || !(y1 < y2)) {
        throw InvalidBoxError("degenerate bounding box " + describe(x1, y1, x2, y2));
    }
    if (x1 < 0 || y1 < 0) {
        throw InvalidBoxError("negative coordinates in bounding box " +
                              describe(x1, y1, x2, y2));
    }
}

double iou(const BBox& a, const BBox& b) {
    const double ix1 = std::max(a.x1, b.x1);
    const double iy1 = std::max(a.y1, b.y1);
    const double ix2 = std::min(a.x2, b.x2);
    const double iy2 = std::min(a.y2, b.y2);
    const double iw = ix2 - ix1;
    const double ih = iy2 - iy1;
    if (iw <= 0 || ih <= 0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

BBox clip(const BBox& b, const ImageDims& dims) {
    const double x1 = std::max(b.x1, 0.0);
    const double y1 = std::max(b.y1, 0.0);
    const double x2 = std::min(b.x2, static_cast<double>(dims.width));
    const double y2 = std::min(b.y2, static_cast<double>(dims.height));
    if (!(x1 < x2) || !(y1 < y2)) {
        throw NoOverlapError("box " + describe(b.x1, b.y1, b.x2, b.y2) +
                             " lies outside a " + std::to_string(dims.width) + "x" +
                             std::to_string(dims.height) + " image");
    }
    return BBox(x1, y1, x2, y2);
}

NormBBox normalize(const BBox& b, const ImageDims& dims) {
    if (dims.width <= 0 || dims.height <= 0) {
        throw ValidationError("cannot normalize against zero-sized image");
    }
    const double w = dims.width;
    const double h = dims.height;
    return NormBBox{b.x1 / w, b.y1 / h, b.x2 / w, b.y2 / h};
}

BBox denormalize(const NormBBox& n, const ImageDims& dims) {
    if (dims.width <= 0 || dims.height <= 0) {
        throw ValidationError("cannot denormalize against zero-sized image");
    }
    return BBox(n.x1 * dims.width, n.y1 * dims.height, n.x2 * dims.width,
                n.y2 * dims.height);
}

CropRect sample_crop(const ImageDims& dims, const BBox& gold, Rng& rng,
                     const CropConfig& cfg) {
    auto slack = [&](double s) {
        double v = std::floor(s);
        if (cfg.max_margin >= 0) v = std::min(v, cfg.max_margin);
        return static_cast<std::int64_t>(std::max(v, 0.0));
    };
    const std::int64_t left = rng.uniform_int(0, slack(gold.x1));
    const std::int64_t top = rng.uniform_int(0, slack(gold.y1));
    const std::int64_t right = rng.uniform_int(0, slack(dims.width - gold.x2));
    const std::int64_t bottom = rng.uniform_int(0, slack(dims.height - gold.y2));
    return CropRect(gold.x1 - left, gold.y1 - top, gold.x2 + right, gold.y2 + bottom);
}

BBox remap_bbox(const BBox& b, const CropRect& crop) {
    if (!crop.contains(b)) {
        throw ContainmentError("box not contained in crop");
    }
    return BBox(b.x1 - crop.x1, b.y1 - crop.y1, b.x2 - crop.x1, b.y2 - crop.y1);
}

PageCategory page_category(const BBox& b, const ImageDims& dims) {
    return b.y1 < dims.page_height ? PageCategory::first_page
                                   : PageCategory::beyond_first_page;
}

}  // namespace visa::geom
