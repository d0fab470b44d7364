use std::ffi::CString;

use pyo3::prelude::*;

fn run(code: &str) {
    Python::attach(|py| {
        let code = CString::new(code).unwrap();
        py.run(&code, None, None).unwrap();
    });
}

fn init() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| {
        pyo3::append_to_inittab!(coverart_py);
        Python::initialize();
    });
}

use coverart_py::coverart_py;

#[test]
fn generator_and_fitness_from_python() {
    init();
    run(r#"
import coverart_py as ca
g = ca.Generator(seed=3, latent_dim=4, image_size=4)
p = ca.Predictor(image_size=4, seed=1)
z = [0.5, -0.2, 0.1, 0.0]
px = g.generate(z)
assert len(px) == 48
t = p.predict(px)
assert ca.fitness(g, p, z, t) == 0.0
assert ca.fitness_grad(g, p, z, t) == [0.0] * 4
"#);
}

#[test]
fn errors_become_value_errors() {
    init();
    run(r#"
import coverart_py as ca
g = ca.Generator(seed=3, latent_dim=4, image_size=4)
for bad in (lambda: g.generate([0.0]), lambda: g.generate([0.0] * 4, genre="jazz"),
            lambda: ca.Predictor(image_size=4).predict([2.0] * 48)):
    try:
        bad()
    except ValueError:
        pass
    else:
        raise AssertionError("accepted bad input")
"#);
}
