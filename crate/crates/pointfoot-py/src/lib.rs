use pyo3::prelude::*;

#[pymodule]
fn pointfoot_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
