#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gctr/geometry.h"

namespace gctr {

// Tight box of a point set and its space diagonal.
struct BoundingDiameter {
  Point3 min_corner;
  Point3 max_corner;
  double diameter;
};

// Orthonormal frame in which voxels are axis aligned: a point p is binned by
// its coordinates axes * (p - origin). Rows of `axes` are the frame axes.
struct GridFrame {
  Matrix3 axes = Matrix3::Identity();
  Point3 origin = Point3::Zero();

  Point3 to_local(const Point3& p) const { return axes * (p - origin); }

  static GridFrame anchored_at(const Point3& origin);
};

// Centroid-anchored frame along the principal axes of the points (decreasing
// variance, right handed). Cells of a grid in this frame are symmetric about
// the centroid, so a sign flip of any axis yields the same partition; binning
// in it therefore commutes with rotation and translation of the cloud.
GridFrame principal_frame(std::span<const Point3> points);

// Segment centroids standing in for a cloud. source_indices[k] lists the
// original cloud indices averaged into points[k].
struct SalientStructure {
  std::vector<Point3> points;
  std::vector<std::vector<std::size_t>> source_indices;
  double cell_size = 0.0;

  std::size_t size() const noexcept { return points.size(); }
};

// Throws Error(kZeroDiameter) if all points coincide.
BoundingDiameter containing_box(const PointCloud& cloud);
BoundingDiameter containing_box(std::span<const Point3> points);
// Box measured along the frame axes; corners are in frame coordinates.
BoundingDiameter containing_box(std::span<const Point3> points,
                                const GridFrame& frame);

// Voxel-grid centroid clustering with cubic cells of edge `cell_size`, anchored
// at the cloud's min corner. Segments are ordered by cell key. Throws
// Error(kDegenerateCloud) when fewer than four cells are occupied.
SalientStructure extract_salient_points(const PointCloud& cloud,
                                        double cell_size);
SalientStructure extract_salient_points(const PointCloud& cloud,
                                        double cell_size,
                                        const GridFrame& frame);

// Halves the cell (at most `max_halvings` times) until extraction succeeds.
SalientStructure extract_salient_points_adaptive(const PointCloud& cloud,
                                                 double initial_cell_size,
                                                 const GridFrame& frame,
                                                 int max_halvings = 4);

// Drops segments summarizing fewer than `min_points` points (isolated outlier
// cells). Throws Error(kDegenerateCloud) if fewer than four segments remain.
SalientStructure prune_sparse_segments(const SalientStructure& salient,
                                       std::size_t min_points);

// Keeps points whose mean distance to their k nearest neighbors is at most
// mean + std_ratio * stddev over the cloud, preserving order. Returns the
// input unchanged if it has k or fewer points.
PointCloud remove_statistical_outliers(const PointCloud& cloud, std::size_t k,
                                       double std_ratio);

struct ScaleNormalization {
  PointCloud scaled;
  double pre_scale;
  // Maps the input c2 onto `scaled`.
  SimilarityTransform transform;
};

// Scales c2 about its box center so both containing boxes share a diameter.
ScaleNormalization normalize_scale_pair(const PointCloud& c1,
                                        const PointCloud& c2);

}  // namespace gctr
