#include <pybind11/pybind11.h>

namespace py = pybind11;

PYBIND11_MODULE(_omnikit, m) { m.doc() = "omnikit core bindings"; }
