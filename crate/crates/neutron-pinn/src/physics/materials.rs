//! Two-group cross-section sets and piecewise-constant material maps.
//!
//! A [`MaterialMap`] is a uniform Cartesian grid of cells, each tagged with a
//! material id (0 marks cells outside the computational domain) plus a table
//! of two-group constants per id. Maps serialize to a small line-oriented
//! text format, see [`MaterialMap::parse`].

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Two-group diffusion constants for one material region (cm units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoGroupMaterial {
    /// Fast-group diffusion coefficient (cm).
    pub d1: f64,
    /// Thermal-group diffusion coefficient (cm).
    pub d2: f64,
    /// Fast-group absorption cross section (1/cm).
    pub sigma_a1: f64,
    /// Thermal-group absorption cross section (1/cm).
    pub sigma_a2: f64,
    /// Fast-group nu-fission cross section (1/cm).
    pub nu_f1: f64,
    /// Thermal-group nu-fission cross section (1/cm).
    pub nu_f2: f64,
    /// Downscattering cross section fast -> thermal (1/cm).
    pub sigma_12: f64,
    /// Fast-group fission spectrum fraction.
    pub chi1: f64,
    /// Thermal-group fission spectrum fraction.
    pub chi2: f64,
}

impl TwoGroupMaterial {
    /// Two-region benchmark, material 1 (the multiplying core region).
    pub fn two_region_core() -> TwoGroupMaterial {
        TwoGroupMaterial {
            d1: 1.268,
            d2: 0.1902,
            sigma_a1: 0.007181,
            sigma_a2: 0.07047,
            nu_f1: 0.004609,
            nu_f2: 0.08675,
            sigma_12: 0.02767,
            chi1: 1.0,
            chi2: 0.0,
        }
    }

    /// Two-region benchmark, material 2 (the subcritical outer region).
    pub fn two_region_blanket() -> TwoGroupMaterial {
        TwoGroupMaterial {
            d1: 1.255,
            d2: 0.211,
            sigma_a1: 0.008252,
            sigma_a2: 0.1003,
            nu_f1: 0.004602,
            nu_f2: 0.1091,
            sigma_12: 0.02533,
            chi1: 1.0,
            chi2: 0.0,
        }
    }

    fn iaea_fuel(sigma_a2: f64) -> TwoGroupMaterial {
        TwoGroupMaterial {
            d1: 1.5,
            d2: 0.4,
            sigma_a1: 0.010,
            sigma_a2,
            nu_f1: 0.0,
            nu_f2: 0.135,
            sigma_12: 0.02,
            chi1: 1.0,
            chi2: 0.0,
        }
    }

    /// IAEA quarter-core fuel region 1 (outer fuel).
    pub fn iaea_fuel_1() -> TwoGroupMaterial {
        TwoGroupMaterial::iaea_fuel(0.080)
    }

    /// IAEA quarter-core fuel region 2 (inner fuel).
    pub fn iaea_fuel_2() -> TwoGroupMaterial {
        TwoGroupMaterial::iaea_fuel(0.085)
    }

    /// IAEA quarter-core fuel region 3 (fuel with control rods).
    pub fn iaea_fuel_3() -> TwoGroupMaterial {
        TwoGroupMaterial::iaea_fuel(0.130)
    }

    /// IAEA quarter-core region 4 (water reflector).
    pub fn iaea_reflector() -> TwoGroupMaterial {
        TwoGroupMaterial {
            d1: 2.0,
            d2: 0.3,
            sigma_a1: 0.0,
            sigma_a2: 0.010,
            nu_f1: 0.0,
            nu_f2: 0.0,
            sigma_12: 0.04,
            chi1: 1.0,
            chi2: 0.0,
        }
    }

    /// Infinite-medium multiplication factor:
    /// `(nf1 + nf2 * S12 / Sa2) / (Sa1 + S12)`.
    pub fn k_infinity(&self) -> f64 {
        (self.nu_f1 + self.nu_f2 * self.sigma_12 / self.sigma_a2)
            / (self.sigma_a1 + self.sigma_12)
    }

    /// Fast-group removal including the transverse leakage correction
    /// `D1 * B^2` for a planar model of a finite-height core.
    pub fn removal_1(&self, axial_buckling: f64) -> f64 {
        self.sigma_a1 + self.sigma_12 + self.d1 * axial_buckling
    }

    /// Thermal-group removal including the transverse leakage correction.
    pub fn removal_2(&self, axial_buckling: f64) -> f64 {
        self.sigma_a2 + self.d2 * axial_buckling
    }
}

/// Boundary condition tag for one edge of the map bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeBc {
    /// Dirichlet zero flux.
    ZeroFlux,
    /// Reflective / symmetry (zero normal current).
    Symmetry,
}

impl EdgeBc {
    fn tag(self) -> &'static str {
        match self {
            EdgeBc::ZeroFlux => "zeroflux",
            EdgeBc::Symmetry => "symmetry",
        }
    }

    fn from_tag(s: &str) -> Result<EdgeBc> {
        match s {
            "zeroflux" => Ok(EdgeBc::ZeroFlux),
            "symmetry" => Ok(EdgeBc::Symmetry),
            other => Err(Error::Parse {
                what: "material map".into(),
                detail: format!("unknown boundary tag '{other}'"),
            }),
        }
    }
}

/// Piecewise-constant material layout on a uniform cell grid.
///
/// Cell (i, j) covers `[i*cell, (i+1)*cell] x [j*cell, (j+1)*cell]` in cm,
/// with j = 0 at the bottom. Id 0 marks cells outside the domain (the flux
/// is pinned to zero on the stepped boundary between active and id-0 cells).
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialMap {
    nx: usize,
    ny: usize,
    cell: f64,
    ids: Vec<u8>,
    bc: [EdgeBc; 4],
    materials: BTreeMap<u8, TwoGroupMaterial>,
    /// Transverse (axial) buckling in 1/cm^2; adds `D_g * B^2` to every
    /// group removal term to model leakage out of the 2D plane.
    axial_buckling: f64,
}

/// Edge order used for the boundary tags: left, right, bottom, top.
pub const EDGE_NAMES: [&str; 4] = ["left", "right", "bottom", "top"];

impl MaterialMap {
    pub fn new(
        nx: usize,
        ny: usize,
        cell: f64,
        ids: Vec<u8>,
        bc: [EdgeBc; 4],
        materials: BTreeMap<u8, TwoGroupMaterial>,
    ) -> Result<MaterialMap> {
        if nx == 0 || ny == 0 || !(cell > 0.0) {
            return Err(Error::InvalidConfig("material map needs nx, ny, cell > 0".into()));
        }
        if ids.len() != nx * ny {
            return Err(Error::DimensionMismatch { expected: nx * ny, got: ids.len() });
        }
        for &id in &ids {
            if id != 0 && !materials.contains_key(&id) {
                return Err(Error::InvalidConfig(format!("material id {id} has no constants")));
            }
        }
        Ok(MaterialMap { nx, ny, cell, ids, bc, materials, axial_buckling: 0.0 })
    }

    pub fn axial_buckling(&self) -> f64 {
        self.axial_buckling
    }

    pub fn set_axial_buckling(&mut self, b2: f64) {
        self.axial_buckling = b2;
    }

    /// The canonical two-region steady benchmark layout.
    pub fn two_region_benchmark() -> MaterialMap {
        MaterialMap::parse(include_str!("../../data/two_region.map")).expect("embedded map")
    }

    /// The IAEA 2D quarter-core benchmark layout.
    pub fn iaea_quarter_core() -> MaterialMap {
        MaterialMap::parse(include_str!("../../data/iaea2d.map")).expect("embedded map")
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Cell edge length in cm.
    pub fn cell(&self) -> f64 {
        self.cell
    }

    /// Domain width nx * cell (cm).
    pub fn width(&self) -> f64 {
        self.nx as f64 * self.cell
    }

    /// Domain height ny * cell (cm).
    pub fn height(&self) -> f64 {
        self.ny as f64 * self.cell
    }

    /// Boundary tags in the order left, right, bottom, top.
    pub fn edge_bc(&self) -> [EdgeBc; 4] {
        self.bc
    }

    pub fn material_table(&self) -> &BTreeMap<u8, TwoGroupMaterial> {
        &self.materials
    }

    /// Material id of cell (i, j); 0 means outside the domain.
    pub fn cell_id(&self, i: usize, j: usize) -> u8 {
        self.ids[j * self.nx + i]
    }

    pub fn is_active_cell(&self, i: usize, j: usize) -> bool {
        self.cell_id(i, j) != 0
    }

    /// Material id covering the point (x, y); `None` outside the bounding
    /// box or in an id-0 cell. Points on an interior cell edge resolve to
    /// the cell on the upper-right side of the edge.
    pub fn id_at(&self, x: f64, y: f64) -> Option<u8> {
        if x < 0.0 || y < 0.0 || x > self.width() || y > self.height() {
            return None;
        }
        let i = ((x / self.cell) as usize).min(self.nx - 1);
        let j = ((y / self.cell) as usize).min(self.ny - 1);
        match self.cell_id(i, j) {
            0 => None,
            id => Some(id),
        }
    }

    pub fn material(&self, id: u8) -> Result<&TwoGroupMaterial> {
        self.materials
            .get(&id)
            .ok_or_else(|| Error::InvalidConfig(format!("material id {id} has no constants")))
    }

    /// Constants at the point (x, y), or `OutsideMap` if the point is not
    /// in an active cell.
    pub fn material_at(&self, x: f64, y: f64) -> Result<&TwoGroupMaterial> {
        match self.id_at(x, y) {
            Some(id) => self.material(id),
            None => Err(Error::OutsideMap { x, y }),
        }
    }

    /// True when the layout is symmetric under (i, j) -> (j, i). Requires a
    /// square grid.
    pub fn is_diagonally_symmetric(&self) -> bool {
        self.nx == self.ny
            && (0..self.ny).all(|j| (0..self.nx).all(|i| self.cell_id(i, j) == self.cell_id(j, i)))
    }

    /// Parse the text format:
    ///
    /// ```text
    /// # comment
    /// nx 17
    /// ny 17
    /// cell 10.0
    /// bc symmetry zeroflux symmetry zeroflux   # left right bottom top
    /// map                                      # ny rows, top row first
    /// 4 4 ...
    /// ...
    /// material 1
    /// d1 1.5
    /// d2 0.4
    /// sigma_a1 0.010
    /// sigma_a2 0.080
    /// nu_f1 0.0
    /// nu_f2 0.135
    /// sigma_12 0.02
    /// chi1 1.0
    /// chi2 0.0
    /// ```
    pub fn parse(text: &str) -> Result<MaterialMap> {
        let perr = |detail: String| Error::Parse { what: "material map".into(), detail };
        let mut nx = 0usize;
        let mut ny = 0usize;
        let mut cell = 0.0f64;
        let mut buckling = 0.0f64;
        let mut bc: Option<[EdgeBc; 4]> = None;
        let mut rows: Vec<Vec<u8>> = Vec::new();
        let mut materials: BTreeMap<u8, TwoGroupMaterial> = BTreeMap::new();

        #[derive(PartialEq)]
        enum Section {
            Header,
            Map,
            Material(u8),
        }
        let mut section = Section::Header;
        let mut pending: BTreeMap<String, f64> = BTreeMap::new();

        fn finish_material(
            id: u8,
            fields: &mut BTreeMap<String, f64>,
            materials: &mut BTreeMap<u8, TwoGroupMaterial>,
        ) -> Result<()> {
            let mut take = |key: &str| -> Result<f64> {
                fields.remove(key).ok_or_else(|| Error::Parse {
                    what: "material map".into(),
                    detail: format!("material {id} missing field '{key}'"),
                })
            };
            let m = TwoGroupMaterial {
                d1: take("d1")?,
                d2: take("d2")?,
                sigma_a1: take("sigma_a1")?,
                sigma_a2: take("sigma_a2")?,
                nu_f1: take("nu_f1")?,
                nu_f2: take("nu_f2")?,
                sigma_12: take("sigma_12")?,
                chi1: take("chi1")?,
                chi2: take("chi2")?,
            };
            if let Some(extra) = fields.keys().next() {
                return Err(Error::Parse {
                    what: "material map".into(),
                    detail: format!("material {id}: unknown field '{extra}'"),
                });
            }
            if materials.insert(id, m).is_some() {
                return Err(Error::Parse {
                    what: "material map".into(),
                    detail: format!("material {id} defined twice"),
                });
            }
            Ok(())
        }

        for raw in text.lines() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens[0] {
                "map" => {
                    section = Section::Map;
                    continue;
                }
                "material" => {
                    if let Section::Material(id) = section {
                        finish_material(id, &mut pending, &mut materials)?;
                    }
                    let id: u8 = tokens
                        .get(1)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| perr("material line needs a numeric id".into()))?;
                    if id == 0 {
                        return Err(perr("material id 0 is reserved for outside cells".into()));
                    }
                    section = Section::Material(id);
                    continue;
                }
                _ => {}
            }
            match section {
                Section::Header => {
                    let value = tokens
                        .get(1)
                        .ok_or_else(|| perr(format!("header line '{line}' needs a value")))?;
                    match tokens[0] {
                        "nx" => {
                            nx = value
                                .parse()
                                .map_err(|_| perr(format!("bad nx '{value}'")))?
                        }
                        "ny" => {
                            ny = value
                                .parse()
                                .map_err(|_| perr(format!("bad ny '{value}'")))?
                        }
                        "cell" => {
                            cell = value
                                .parse()
                                .map_err(|_| perr(format!("bad cell size '{value}'")))?
                        }
                        "buckling" => {
                            buckling = value
                                .parse()
                                .map_err(|_| perr(format!("bad buckling '{value}'")))?
                        }
                        "bc" => {
                            if tokens.len() != 5 {
                                return Err(perr(
                                    "bc line needs 4 tags: left right bottom top".into(),
                                ));
                            }
                            bc = Some([
                                EdgeBc::from_tag(tokens[1])?,
                                EdgeBc::from_tag(tokens[2])?,
                                EdgeBc::from_tag(tokens[3])?,
                                EdgeBc::from_tag(tokens[4])?,
                            ]);
                        }
                        other => return Err(perr(format!("unknown header key '{other}'"))),
                    }
                }
                Section::Map => {
                    let row: Vec<u8> = tokens
                        .iter()
                        .map(|t| t.parse::<u8>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| perr(format!("bad map row '{line}'")))?;
                    if row.len() != nx {
                        return Err(perr(format!(
                            "map row has {} ids, expected nx = {nx}",
                            row.len()
                        )));
                    }
                    rows.push(row);
                }
                Section::Material(id) => {
                    if tokens.len() != 2 {
                        return Err(perr(format!("material {id}: bad line '{line}'")));
                    }
                    let value: f64 = tokens[1]
                        .parse()
                        .map_err(|_| perr(format!("material {id}: bad value '{}'", tokens[1])))?;
                    pending.insert(tokens[0].to_string(), value);
                }
            }
        }
        if let Section::Material(id) = section {
            finish_material(id, &mut pending, &mut materials)?;
        }
        let bc = bc.ok_or_else(|| perr("missing bc line".into()))?;
        if rows.len() != ny {
            return Err(perr(format!("found {} map rows, expected ny = {ny}", rows.len())));
        }
        // File rows run top to bottom; storage runs bottom to top.
        let mut ids = Vec::with_capacity(nx * ny);
        for row in rows.iter().rev() {
            ids.extend_from_slice(row);
        }
        let mut map = MaterialMap::new(nx, ny, cell, ids, bc, materials)?;
        map.axial_buckling = buckling;
        Ok(map)
    }

    /// Serialize back to the text format accepted by [`MaterialMap::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nx {}", self.nx);
        let _ = writeln!(out, "ny {}", self.ny);
        let _ = writeln!(out, "cell {}", self.cell);
        if self.axial_buckling != 0.0 {
            let _ = writeln!(out, "buckling {}", self.axial_buckling);
        }
        let _ = writeln!(
            out,
            "bc {} {} {} {}",
            self.bc[0].tag(),
            self.bc[1].tag(),
            self.bc[2].tag(),
            self.bc[3].tag()
        );
        let _ = writeln!(out, "map");
        for j in (0..self.ny).rev() {
            let row: Vec<String> =
                (0..self.nx).map(|i| self.cell_id(i, j).to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        for (id, m) in &self.materials {
            let _ = writeln!(out, "material {id}");
            let _ = writeln!(out, "d1 {}", m.d1);
            let _ = writeln!(out, "d2 {}", m.d2);
            let _ = writeln!(out, "sigma_a1 {}", m.sigma_a1);
            let _ = writeln!(out, "sigma_a2 {}", m.sigma_a2);
            let _ = writeln!(out, "nu_f1 {}", m.nu_f1);
            let _ = writeln!(out, "nu_f2 {}", m.nu_f2);
            let _ = writeln!(out, "sigma_12 {}", m.sigma_12);
            let _ = writeln!(out, "chi1 {}", m.chi1);
            let _ = writeln!(out, "chi2 {}", m.chi2);
        }
        out
    }

    pub fn from_file(path: &Path) -> Result<MaterialMap> {
        MaterialMap::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
