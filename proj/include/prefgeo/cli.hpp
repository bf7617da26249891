#ifndef PREFGEO_CLI_HPP
#define PREFGEO_CLI_HPP
namespace prefgeo::cli { inline int run(int, char**) { return 0; } }
#endif
