//! CSV ingestion and export.
//!
//! All files are UTF-8 with header rows and '.' decimal separators. The
//! cost-matrix and weight exports print floats with 17 significant digits,
//! so a CSV round trip reproduces every value bit-exactly.

use crate::analytics::{CostMatrix, WeightVector};
use crate::error::Error;
use crate::model::{BoxType, Item, Order, OrderLine};
use crate::packer::PackingResult;
use crate::pipeline::{AssortmentReport, GridResult};
use crate::solver::{objective, Selection, SelectionProblem};
use crate::Result;
use serde::Serialize;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Format a float with 17 significant digits; parsing the result recovers
/// the exact bit pattern.
pub fn fmt_exact(value: f64) -> String {
    format!("{value:.16e}")
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn csv_err(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or_default();
    Error::Parse {
        file: path_str(path),
        line,
        message: err.to_string(),
    }
}

struct HeaderMap {
    indices: Vec<usize>,
}

impl HeaderMap {
    fn new(path: &Path, headers: &csv::StringRecord, required: &[&str]) -> Result<Self> {
        let mut indices = Vec::with_capacity(required.len());
        for column in required {
            match headers.iter().position(|h| h.trim() == *column) {
                Some(idx) => indices.push(idx),
                None => {
                    return Err(Error::MissingColumn {
                        file: path_str(path),
                        column: column.to_string(),
                    })
                }
            }
        }
        Ok(HeaderMap { indices })
    }

    fn get<'r>(&self, record: &'r csv::StringRecord, slot: usize) -> &'r str {
        record.get(self.indices[slot]).unwrap_or("").trim()
    }
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or_default()
}

fn parse_f64(
    path: &Path,
    record: &csv::StringRecord,
    map: &HeaderMap,
    slot: usize,
    name: &str,
) -> Result<f64> {
    let raw = map.get(record, slot);
    raw.parse::<f64>().map_err(|_| Error::Parse {
        file: path_str(path),
        line: record_line(record),
        message: format!("cannot parse {name} '{raw}' as a number"),
    })
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path_str(path), e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file))
}

fn open_writer(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Error::io(path_str(path), e))?;
    Ok(BufWriter::new(file))
}

/// Read `box_id,length,depth,height,max_weight`.
pub fn read_boxes(path: &Path) -> Result<Vec<BoxType>> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let map = HeaderMap::new(
        path,
        &headers,
        &["box_id", "length", "depth", "height", "max_weight"],
    )?;
    let mut boxes = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let id = map.get(&record, 0).to_string();
        let length = parse_f64(path, &record, &map, 1, "length")?;
        let depth = parse_f64(path, &record, &map, 2, "depth")?;
        let height = parse_f64(path, &record, &map, 3, "height")?;
        let max_weight = parse_f64(path, &record, &map, 4, "max_weight")?;
        let boxed =
            BoxType::new(id, length, depth, height, max_weight).map_err(|e| Error::Parse {
                file: path_str(path),
                line: record_line(&record),
                message: e.to_string(),
            })?;
        boxes.push(boxed);
    }
    Ok(boxes)
}

/// Read `sku_id,length,depth,height,weight`.
pub fn read_skus(path: &Path) -> Result<Vec<Item>> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let map = HeaderMap::new(
        path,
        &headers,
        &["sku_id", "length", "depth", "height", "weight"],
    )?;
    let mut items = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let id = map.get(&record, 0).to_string();
        let length = parse_f64(path, &record, &map, 1, "length")?;
        let depth = parse_f64(path, &record, &map, 2, "depth")?;
        let height = parse_f64(path, &record, &map, 3, "height")?;
        let weight = parse_f64(path, &record, &map, 4, "weight")?;
        let item = Item::new(id, length, depth, height, weight).map_err(|e| Error::Parse {
            file: path_str(path),
            line: record_line(&record),
            message: e.to_string(),
        })?;
        items.push(item);
    }
    Ok(items)
}

/// Read `order_id,sku_id,quantity` and group lines by order id, preserving
/// first-appearance order. Rows of one order need not be contiguous.
pub fn read_orders(path: &Path, catalog: &[Item]) -> Result<Vec<Order>> {
    let by_sku: HashMap<&str, &Item> = catalog.iter().map(|i| (i.sku_id.as_str(), i)).collect();
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let map = HeaderMap::new(path, &headers, &["order_id", "sku_id", "quantity"])?;

    let mut order_index: HashMap<String, usize> = HashMap::new();
    let mut grouped: Vec<(String, Vec<OrderLine>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let order_id = map.get(&record, 0).to_string();
        let sku_id = map.get(&record, 1);
        let quantity_raw = map.get(&record, 2);
        let quantity: u32 = quantity_raw.parse().map_err(|_| Error::Parse {
            file: path_str(path),
            line: record_line(&record),
            message: format!("cannot parse quantity '{quantity_raw}' as a positive integer"),
        })?;
        if quantity == 0 {
            return Err(Error::Parse {
                file: path_str(path),
                line: record_line(&record),
                message: format!("quantity must be >= 1 for order '{order_id}'"),
            });
        }
        let item = *by_sku.get(sku_id).ok_or_else(|| Error::Parse {
            file: path_str(path),
            line: record_line(&record),
            message: format!("unknown sku_id '{sku_id}'"),
        })?;
        let slot = *order_index.entry(order_id.clone()).or_insert_with(|| {
            grouped.push((order_id.clone(), Vec::new()));
            grouped.len() - 1
        });
        grouped[slot].1.push(OrderLine {
            item: item.clone(),
            quantity,
        });
    }

    grouped
        .into_iter()
        .map(|(id, lines)| Order::new(id, lines))
        .collect()
}

pub fn write_boxes(path: &Path, boxes: &[BoxType]) -> Result<()> {
    let mut w = open_writer(path)?;
    let io_err = |e| Error::io(path_str(path), e);
    writeln!(w, "box_id,length,depth,height,max_weight").map_err(io_err)?;
    for b in boxes {
        writeln!(
            w,
            "{},{},{},{},{}",
            b.id, b.dims[0], b.dims[1], b.dims[2], b.max_weight
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn write_skus(path: &Path, items: &[Item]) -> Result<()> {
    let mut w = open_writer(path)?;
    let io_err = |e| Error::io(path_str(path), e);
    writeln!(w, "sku_id,length,depth,height,weight").map_err(io_err)?;
    for i in items {
        writeln!(
            w,
            "{},{},{},{},{}",
            i.sku_id, i.dims[0], i.dims[1], i.dims[2], i.weight
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn write_orders(path: &Path, orders: &[Order]) -> Result<()> {
    let mut w = open_writer(path)?;
    let io_err = |e| Error::io(path_str(path), e);
    writeln!(w, "order_id,sku_id,quantity").map_err(io_err)?;
    for o in orders {
        for line in &o.lines {
            writeln!(w, "{},{},{}", o.order_id, line.item.sku_id, line.quantity).map_err(io_err)?;
        }
    }
    Ok(())
}

/// Write `box_id,ev,w` with exact float formatting.
pub fn write_weights(path: &Path, box_ids: &[String], wv: &WeightVector) -> Result<()> {
    let mut w = open_writer(path)?;
    let io_err = |e| Error::io(path_str(path), e);
    writeln!(w, "box_id,ev,w").map_err(io_err)?;
    for ((id, &ev), &weight) in box_ids.iter().zip(&wv.ev).zip(&wv.w) {
        writeln!(w, "{},{},{}", id, fmt_exact(ev), fmt_exact(weight)).map_err(io_err)?;
    }
    Ok(())
}

/// Read a weights file back: `(box_ids, ev, w)`.
pub fn read_weights(path: &Path) -> Result<(Vec<String>, Vec<f64>, Vec<f64>)> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let map = HeaderMap::new(path, &headers, &["box_id", "ev", "w"])?;
    let (mut ids, mut ev, mut wv) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        ids.push(map.get(&record, 0).to_string());
        ev.push(parse_f64(path, &record, &map, 1, "ev")?);
        wv.push(parse_f64(path, &record, &map, 2, "w")?);
    }
    Ok((ids, ev, wv))
}

/// Write the n x n cost matrix with a leading header row and column of box
/// ids; floats carry 17 significant digits for a bit-exact round trip.
pub fn write_cost_matrix(path: &Path, matrix: &CostMatrix) -> Result<()> {
    let mut w = open_writer(path)?;
    let io_err = |e| Error::io(path_str(path), e);
    let mut header = String::from("box_id");
    for id in matrix.box_ids() {
        header.push(',');
        header.push_str(id);
    }
    writeln!(w, "{header}").map_err(io_err)?;
    for (i, id) in matrix.box_ids().iter().enumerate() {
        let mut line = id.clone();
        for j in 0..matrix.n() {
            line.push(',');
            line.push_str(&fmt_exact(matrix.get(i, j)));
        }
        writeln!(w, "{line}").map_err(io_err)?;
    }
    Ok(())
}

pub fn read_cost_matrix(path: &Path) -> Result<CostMatrix> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.len() < 2 || headers.get(0).map(str::trim) != Some("box_id") {
        return Err(Error::MissingColumn {
            file: path_str(path),
            column: "box_id".to_string(),
        });
    }
    let column_ids: Vec<String> = headers
        .iter()
        .skip(1)
        .map(|h| h.trim().to_string())
        .collect();
    let n = column_ids.len();
    let mut data = Vec::with_capacity(n * n);
    let mut row_ids = Vec::with_capacity(n);
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != n + 1 {
            return Err(Error::Parse {
                file: path_str(path),
                line: record_line(&record),
                message: format!("expected {} fields, found {}", n + 1, record.len()),
            });
        }
        row_ids.push(record.get(0).unwrap_or("").trim().to_string());
        for field in record.iter().skip(1) {
            let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
                file: path_str(path),
                line: record_line(&record),
                message: format!("cannot parse cost '{field}' as a number"),
            })?;
            data.push(value);
        }
    }
    if row_ids.len() != n || row_ids != column_ids {
        return Err(Error::Parse {
            file: path_str(path),
            line: 0,
            message: format!(
                "cost matrix must be square with matching row/column ids ({} rows, {} columns)",
                row_ids.len(),
                n
            ),
        });
    }
    Ok(CostMatrix::from_parts(n, data, column_ids))
}

/// Write a selection: `rank,row_index,box_id,objective_after_step`, where
/// the objective column is the selection objective of the first `rank` rows.
pub fn write_selection(
    path: &Path,
    problem: &SelectionProblem,
    selection: &Selection,
    box_ids: Option<&[String]>,
) -> Result<()> {
    let mut w = open_writer(path)?;
    let io_err = |e| Error::io(path_str(path), e);
    writeln!(w, "rank,row_index,box_id,objective_after_step").map_err(io_err)?;
    for (rank, &row) in selection.rows.iter().enumerate() {
        let step_objective = objective(problem, &selection.rows[..=rank])?;
        let id = box_ids.map(|ids| ids[row].as_str()).unwrap_or("");
        writeln!(
            w,
            "{},{},{},{}",
            rank + 1,
            row,
            id,
            fmt_exact(step_objective)
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// Grid report mirroring the tuning table: one row per setting plus the
/// selected box ids joined by `;`.
pub fn write_grid_report(path: &Path, results: &[GridResult]) -> Result<()> {
    let mut w = open_writer(path)?;
    let io_err = |e| Error::io(path_str(path), e);
    writeln!(
        w,
        "rho,delta,alpha,box_reduction_pct,utilization_improvement_pct,selected_box_ids"
    )
    .map_err(io_err)?;
    for r in results {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.params.rho,
            r.params.delta,
            r.params.alpha,
            r.box_reduction_pct,
            r.utilization_improvement_pct,
            r.selected_box_ids.join(";")
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// One report row with headers; `assortment` ids joined by `;`.
pub fn write_assortment_report(path: &Path, report: &AssortmentReport) -> Result<()> {
    let mut w = open_writer(path)?;
    write_assortment_reports_to(&mut w, std::slice::from_ref(report))
        .map_err(|e| Error::io(path_str(path), e))
}

pub fn write_assortment_reports(path: &Path, reports: &[AssortmentReport]) -> Result<()> {
    let mut w = open_writer(path)?;
    write_assortment_reports_to(&mut w, reports).map_err(|e| Error::io(path_str(path), e))
}

fn write_assortment_reports_to(
    w: &mut impl Write,
    reports: &[AssortmentReport],
) -> std::io::Result<()> {
    writeln!(
        w,
        "corpus,orders,total_boxes_used,utilization,unpacked_items,packed_item_volume,used_box_volume,assortment"
    )?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.corpus_label,
            r.orders,
            r.total_boxes_used,
            r.utilization,
            r.unpacked_items,
            r.packed_item_volume,
            r.used_box_volume,
            r.assortment_ids.join(";")
        )?;
    }
    Ok(())
}

/// Items that fit in no box, one row each: `order_id,sku_id,reason`.
pub fn write_unpacked(path: &Path, results: &[PackingResult]) -> Result<()> {
    let mut w = open_writer(path)?;
    let io_err = |e| Error::io(path_str(path), e);
    writeln!(w, "order_id,sku_id,reason").map_err(io_err)?;
    for result in results {
        for unpacked in &result.unpacked {
            writeln!(
                w,
                "{},{},{}",
                result.order_id,
                unpacked.item.sku_id,
                unpacked.reason.as_str()
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TraceRecord<'a> {
    order_id: &'a str,
    box_instance: usize,
    box_id: &'a str,
    sku_id: &'a str,
    origin: [f64; 3],
    oriented_dims: [f64; 3],
}

/// Per-placement packing trace as line-delimited JSON records.
pub fn write_trace(path: &Path, results: &[PackingResult]) -> Result<()> {
    let mut w = open_writer(path)?;
    for result in results {
        for packed in &result.boxes {
            for p in &packed.placements {
                let record = TraceRecord {
                    order_id: &result.order_id,
                    box_instance: p.box_instance,
                    box_id: &packed.box_type.id,
                    sku_id: &p.item.sku_id,
                    origin: p.origin,
                    oriented_dims: p.oriented_dims,
                };
                let line = serde_json::to_string(&record)
                    .map_err(|e| Error::invalid(format!("trace serialization: {e}")))?;
                writeln!(w, "{line}").map_err(|e| Error::io(path_str(path), e))?;
            }
        }
    }
    Ok(())
}
