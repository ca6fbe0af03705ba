#pragma once

#include <string>

#include "visa/errors.hpp"
#include "visa/rng.hpp"

namespace visa::geom {

/// Axis-aligned rectangle in image pixel space, top-left (x1,y1) to
/// bottom-right (x2,y2). Areas use the continuous convention
/// (width = x2 - x1), not inclusive pixel counts.
struct BBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    BBox() = default;
    BBox(double x1_, double y1_, double x2_, double y2_);

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    double center_x() const { return (x1 + x2) / 2.0; }
    double center_y() const { return (y1 + y2) / 2.0; }

    bool contains(const BBox& other) const {
        return x1 <= other.x1 && y1 <= other.y1 && x2 >= other.x2 && y2 >= other.y2;
    }
    bool contains_point(double px, double py) const {
        return x1 <= px && px < x2 && y1 <= py && py < y2;
    }

    bool operator==(const BBox&) const = default;
};

/// Same four fields as BBox, each a fraction in [0,1] of image width/height.
struct NormBBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    bool operator==(const NormBBox&) const = default;
};

struct ImageDims {
    int width = 0;
    int height = 0;
    int page_height = 980;
};

/// Retained subregion of an image; always contains the gold box.
using CropRect = BBox;

struct CropConfig {
    // Cap on the margin sampled on each side, in pixels. Negative means
    // unbounded (full available slack).
    double max_margin = -1.0;
};

enum class PageCategory { first_page, beyond_first_page };

double iou(const BBox& a, const BBox& b);

BBox clip(const BBox& b, const ImageDims& dims);

NormBBox normalize(const BBox& b, const ImageDims& dims);
BBox denormalize(const NormBBox& n, const ImageDims& dims);

/// Draw a crop containing the gold box; margins on each side are sampled
/// independently and uniformly over the available integer slack.
CropRect sample_crop(const ImageDims& dims, const BBox& gold, Rng& rng,
                     const CropConfig& cfg = {});

/// Translate a box into the coordinate frame of a crop that contains it.
BBox remap_bbox(const BBox& b, const CropRect& crop);

PageCategory page_category(const BBox& b, const ImageDims& dims);

}  // namespace visa::geom
