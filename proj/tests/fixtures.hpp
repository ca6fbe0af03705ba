#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "visa/corpus.hpp"

namespace visa::testfix {

inline std::filesystem::path fresh_dir(const std::string& tag) {
    const auto dir =
        std::filesystem::temp_directory_path() / ("visa_test_" + tag + "_" +
                                                  std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_image(const std::filesystem::path& path, int width, int height,
                        cv::Scalar color = {255, 255, 255}) {
    std::filesystem::create_directories(path.parent_path());
    cv::Mat img(height, width, CV_8UC3, color);
    cv::imwrite(path.string(), img);
}

inline void write_lines(const std::filesystem::path& path,
                        const std::vector<std::string>& lines) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    for (const auto& l : lines) out << l << "\n";
}

/// Tiny two-document corpus with images on disk.
inline corpus::Dataset toy_dataset(const std::filesystem::path& dir) {
    corpus::Dataset ds;
    ds.root = dir;
    for (int i = 0; i < 2; ++i) {
        corpus::DocumentImage d;
        d.doc_id = "doc" + std::to_string(i);
        d.width = 200;
        d.height = 300;
        d.page_height = 150;
        d.image_path = "images/doc" + std::to_string(i) + ".png";
        write_image(dir / d.image_path, d.width, d.height);
        ds.docs.emplace(d.doc_id, d);
    }
    corpus::AttributionExample ex;
    ex.example_id = "ex0";
    ex.query = "what is it";
    ex.answers = {"a thing"};
    ex.gold_doc_id = "doc0";
    ex.gold_bbox = geom::BBox(10, 10, 110, 60);
    ex.category = corpus::Category::passage_first_page;
    ex.split = corpus::Split::test;
    ds.examples.push_back(ex);
    return ds;
}

}  // namespace visa::testfix
