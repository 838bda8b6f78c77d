use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(somor_py::somor_py)(py);
        let globals = PyDict::new(py);
        globals.set_item("sm", module).unwrap();
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn two_mass_transfer() {
    run(r#"
s = sm.System.dsms(10, 1)
assert (s.n1, s.n2) == (10, 1)
t = s.transfer(1j)
assert len(t) == 3 and len(t[0]) == 1
assert all(isinstance(z, complex) for row in t for z in row)
"#);
}

#[test]
fn irka_on_random_system() {
    run(r#"
s = sm.System.random(40, 4, 2, 2, seed=3)
rom, info = sm.irka(s, 4, max_iter=10)
assert rom.order == 4
assert len(rom.f) == 4 and len(rom.f[0]) == 2
assert info["iterations"] >= 1
assert all(z.real > 0 for z in info["shifts"])
"#);
}

#[test]
fn errors_map_to_python_exceptions() {
    run(r#"
try:
    sm.System.dsms(10, 20)
    raise AssertionError("no error")
except ValueError:
    pass
try:
    sm.ReducedModel([[1.0, 0.0]], [[1.0]], [[1.0]], [[1.0]], [[1.0]])
    raise AssertionError("no error")
except ValueError:
    pass
try:
    sm.System.load("/nonexistent/somor")
    raise AssertionError("no error")
except OSError:
    pass
assert issubclass(sm.NumericalError, RuntimeError)
"#);
}
