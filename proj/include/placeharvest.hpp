#pragma once

#include <placeharvest/corpus.hpp>
#include <placeharvest/error.hpp>
#include <placeharvest/evaluation.hpp>
#include <placeharvest/extractors.hpp>
#include <placeharvest/footprint.hpp>
#include <placeharvest/gazetteer.hpp>
#include <placeharvest/geo.hpp>
#include <placeharvest/geocluster.hpp>
#include <placeharvest/io.hpp>
#include <placeharvest/pipeline.hpp>
#include <placeharvest/synth.hpp>
