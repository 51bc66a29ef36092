#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
PDF report of a bench run.
"""

import os
import logging
from datetime import datetime

from reportlab.lib.pagesizes import A4, landscape
from reportlab.lib import colors
from reportlab.platypus import SimpleDocTemplate, Table, TableStyle, Paragraph, Spacer
from reportlab.lib.styles import getSampleStyleSheet, ParagraphStyle
from reportlab.lib.enums import TA_LEFT
from reportlab.lib.units import inch

logger = logging.getLogger(__name__)

TITLE_FONT = 'Helvetica-Bold'
BODY_FONT = 'Helvetica'

HEADER_ROW = ['Filter', 'Init GT', 'Final GT', 'Best GT', 'Init DT', 'Final DT', 'Best DT', 'Images']


def _cell(value):
    if value is None:
        return 'failed'
    if isinstance(value, str):
        return value
    return f"{value:.2f}"


def _gain_color(row):
    """Green when reversal improved on the filtered input, red when it lost ground."""
    if not isinstance(row.best_gt, float) or not isinstance(row.init_gt, float):
        return None
    gain = row.best_gt - row.init_gt
    if gain >= 1.0:
        return colors.HexColor('#d9f2d9')
    if gain < 0.0:
        return colors.HexColor('#f7d6d6')
    return None


def save_bench_to_pdf(bench, filename="bench.pdf", title="Reverse filtering bench", config=None):
    """Save a bench table to a PDF file.

    Args:
        bench (BenchReport): Result of run_bench
        filename (str): Output PDF filename
        title (str): Document title
        config (dict, optional): Configuration options
            - margin: Margin in points (default: 36, 0.5 inch)
            - landscape: Use landscape A4 (default: True)

    Returns:
        str: Path to the created PDF file
    """
    if config is None:
        config = {}

    margin = config.get('margin', 0.5 * inch)
    page_size = landscape(A4) if config.get('landscape', True) else A4

    os.makedirs(os.path.dirname(os.path.abspath(filename)), exist_ok=True)
    doc = SimpleDocTemplate(filename, pagesize=page_size,
                            topMargin=margin, bottomMargin=margin,
                            leftMargin=margin, rightMargin=margin)
    elements = []

    styles = getSampleStyleSheet()
    title_style = ParagraphStyle(
        'BenchTitle', parent=styles['Title'], fontName=TITLE_FONT, fontSize=18, alignment=TA_LEFT
    )
    normal_style = ParagraphStyle(
        'BenchNormal', parent=styles['Normal'], fontName=BODY_FONT, fontSize=9
    )

    elements.append(Paragraph(title, title_style))
    elements.append(Paragraph(
        f"{len(bench.images)} image(s), {bench.iterations} iterations per run. "
        f"PSNR in dB (joint-channel, peak 1.0), averaged arithmetically over images. "
        f"Generated {datetime.now().strftime('%Y-%m-%d %H:%M')}.", normal_style))
    elements.append(Spacer(1, 12))

    data = [HEADER_ROW]
    for row in bench.rows:
        data.append([row.filter_name] + [_cell(v) for v in row.columns()] + [str(row.n_images)])

    available = page_size[0] - 2 * margin
    first_col = available * 0.37
    other_col = (available - first_col) / (len(HEADER_ROW) - 1)
    table = Table(data, colWidths=[first_col] + [other_col] * (len(HEADER_ROW) - 1), repeatRows=1)

    table_style = TableStyle([
        ('FONTNAME', (0, 0), (-1, 0), TITLE_FONT),
        ('FONTNAME', (0, 1), (-1, -1), BODY_FONT),
        ('FONTSIZE', (0, 0), (-1, -1), 8),
        ('ALIGN', (1, 0), (-1, -1), 'RIGHT'),
        ('VALIGN', (0, 0), (-1, -1), 'MIDDLE'),
        ('LINEBELOW', (0, 0), (-1, 0), 0.8, colors.black),
        ('GRID', (0, 1), (-1, -1), 0.25, colors.lightgrey),
    ])
    for index, row in enumerate(bench.rows, start=1):
        shade = _gain_color(row)
        if shade is not None:
            table_style.add('BACKGROUND', (3, index), (3, index), shade)
    table.setStyle(table_style)
    elements.append(table)

    failed = [row for row in bench.rows if row.error]
    if failed:
        elements.append(Spacer(1, 12))
        elements.append(Paragraph("<b>Errors</b>", normal_style))
        for row in failed:
            elements.append(Paragraph(f"{row.filter_name}: {row.error}", normal_style))

    def add_page_number(canvas, doc):
        canvas.setFont(BODY_FONT, 8)
        canvas.drawString(margin, margin / 2, f"Page {canvas.getPageNumber()} | {title}")

    doc.build(elements, onFirstPage=add_page_number, onLaterPages=add_page_number)

    logger.info(f"Saved PDF to {filename}")
    return filename
