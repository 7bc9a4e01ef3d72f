#include <string>
#include <vector>

#include "mlmn/cli/app.hpp"

int main(int argc, char** argv) {
    return mlmn::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
