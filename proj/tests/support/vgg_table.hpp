#pragma once

#include <vector>

#include "cxr/neural/tensor.hpp"

namespace vgg_table {

using cxr::neural::Shape;

struct TableRow {
  const char* kind;
  Shape hwc;
};

// Layer table of the classifier, rows 1..22: (kind, H x W x C or flat size).
inline const std::vector<TableRow> kVggTable = {
    {"conv", {224, 224, 64}}, {"conv", {224, 224, 64}}, {"mp", {112, 112, 64}},  {"conv", {112, 112, 128}},
    {"conv", {112, 112, 128}}, {"mp", {56, 56, 128}},   {"conv", {56, 56, 256}},  {"conv", {56, 56, 256}},
    {"conv", {56, 56, 256}},  {"mp", {28, 28, 256}},    {"conv", {28, 28, 512}},  {"conv", {28, 28, 512}},
    {"conv", {28, 28, 512}},  {"mp", {14, 14, 512}},    {"conv", {14, 14, 512}},  {"conv", {14, 14, 512}},
    {"conv", {14, 14, 512}},  {"mp", {7, 7, 512}},      {"fc", {25088}},          {"fc", {1024}},
    {"fc", {1024}},           {"fc", {3}},
};

}  // namespace vgg_table
