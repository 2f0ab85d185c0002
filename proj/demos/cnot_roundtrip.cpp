// Build the two-spider CNOT gadget, evaluate it under the alpha and nu
// models, and fuse a small spider chain — a quick tour of the library.

#include <cstdio>

#include <wtcalc/diagram.hpp>
#include <wtcalc/model.hpp>
#include <wtcalc/rewrite.hpp>
#include <wtcalc/semantics.hpp>

using namespace wtcalc;

int main() {
    Diagram cnot;
    int z = cnot.add_node(Node::z(0));
    int x = cnot.add_node(Node::x(0));
    cnot.connect(Diagram::on_boundary(cnot.add_input()), Diagram::on_node(z));
    cnot.connect(Diagram::on_boundary(cnot.add_input()), Diagram::on_node(x));
    cnot.connect(Diagram::on_node(z), Diagram::on_boundary(cnot.add_output()));
    cnot.connect(Diagram::on_node(x), Diagram::on_boundary(cnot.add_output()));
    cnot.connect_nodes(z, x);

    std::printf("CNOT gadget under alpha (note the 1/sqrt(2)):\n%s\n",
                dump_tensor(evaluate(cnot, model_alpha())).c_str());
    std::printf("the same gadget under nu (exactly CNOT):\n%s\n",
                dump_tensor(evaluate(cnot, model_nu())).c_str());

    Diagram chain;
    int a = chain.add_node(Node::z(M_PI / 4));
    int b = chain.add_node(Node::z(M_PI / 4));
    chain.connect(Diagram::on_boundary(chain.add_input()), Diagram::on_node(a));
    chain.connect_nodes(a, b);
    chain.connect(Diagram::on_node(b), Diagram::on_boundary(chain.add_output()));

    SimplifyOptions opt;
    opt.validate = true;
    auto [fused, trace] = simplify(chain, opt);
    std::printf("fused %zu spiders in %zu validated step(s):\n%s", chain.nodes.size(), trace.size(),
                serialize(fused).c_str());
    return 0;
}
