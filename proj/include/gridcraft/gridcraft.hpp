#pragma once

// Umbrella header for the algorithm part of gridcraft. Image file I/O lives
// in <gridcraft/image_io.hpp> and needs libpng and libtiff.

#include <gridcraft/core.hpp>
#include <gridcraft/extraction.hpp>
#include <gridcraft/gridding.hpp>
#include <gridcraft/pipeline.hpp>
#include <gridcraft/profiles.hpp>
#include <gridcraft/synth.hpp>
#include <gridcraft/template_match.hpp>
