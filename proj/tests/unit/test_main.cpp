#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <torch/torch.h>

int main(int argc, char** argv) {
    torch::set_num_threads(1);  // deterministic
    doctest::Context ctx;
    ctx.applyCommandLine(argc, argv);
    return ctx.run();
}
