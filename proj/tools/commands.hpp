#pragma once

namespace pdterm::cli {

int run(int argc, char** argv);

}  // namespace pdterm::cli
