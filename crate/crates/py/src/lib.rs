use pyo3::prelude::*;

#[pymodule]
fn tal_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
