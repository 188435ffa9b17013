import os
import logging
from typing import List, Dict, Any, Optional

from supabase import create_client, Client

from utils.report_utils import RunReport

logger = logging.getLogger(__name__)

RUNS_TABLE = "spcap_runs"

SCHEMA_FIELDS = {
    RUNS_TABLE: [
        "id", "instance_id", "num_terminals", "num_bases", "served_aco", "served_rins",
        "coverage", "max_cluster", "objective", "pi_bound", "wall_time", "mode", "seed",
        "params", "timestamp", "created_at"
    ],
}


def get_supabase_client() -> Optional[Client]:
    """Get a Supabase client instance.

    Returns:
        Optional[Client]: Supabase client instance or None if credentials are missing
    """
    try:
        supabase_url = os.environ.get("SUPABASE_URL")
        supabase_key = os.environ.get("SUPABASE_KEY")

        if not supabase_url or not supabase_key:
            logger.warning("Supabase credentials not found in environment variables")
            return None

        logger.info(f"Supabase client initialized with URL: {supabase_url}")
        return create_client(supabase_url, supabase_key)

    except Exception as e:
        logger.error(f"Error initializing Supabase client: {e}")
        return None


def filter_schema_fields(data: Dict[str, Any], table_name: str) -> Dict[str, Any]:
    """Filter data to include only fields that exist in the specified table schema.

    Args:
        data: Dictionary containing data to filter
        table_name: Name of the table to filter fields for

    Returns:
        Dict[str, Any]: Filtered data containing only fields in the table schema
    """
    fields = SCHEMA_FIELDS.get(table_name, [])
    if not fields:
        return data
    return {k: v for k, v in data.items() if k in fields}


def report_records(report: RunReport, meta: Dict[str, Any]) -> List[Dict[str, Any]]:
    """One spcap_runs record per report row, with run metadata merged in."""
    records = []
    for row in report.rows:
        record = {
            "instance_id": row.instance_id,
            "num_terminals": row.num_terminals,
            "num_bases": row.num_bases,
            "served_aco": row.served_aco,
            "served_rins": row.served_rins,
            "coverage": row.coverage,
            "max_cluster": row.max_cluster,
            "objective": row.objective,
            "pi_bound": row.pi_bound,
            "wall_time": row.wall_time,
        }
        record.update(meta)
        records.append(filter_schema_fields(record, RUNS_TABLE))
    return records


def save_run_report(report: RunReport, meta: Optional[Dict[str, Any]] = None,
                    client: Optional[Client] = None) -> bool:
    """Save report rows to the spcap_runs table.

    Args:
        report: Rows to insert
        meta: Extra columns for every row (mode, seed, params, timestamp)
        client: Supabase client; created from the environment when missing

    Returns:
        bool: True if successful, False otherwise
    """
    try:
        supabase = client or get_supabase_client()
        if not supabase:
            logger.error("Failed to initialize Supabase client")
            return False

        records = report_records(report, meta or {})
        if not records:
            logger.warning("No report rows to save to Supabase")
            return False

        result = supabase.table(RUNS_TABLE).insert(records).execute()

        if hasattr(result, 'data') and result.data:
            logger.info(f"Successfully saved {len(records)} run rows to Supabase")
            return True
        logger.error("Failed to save run rows to Supabase")
        return False

    except Exception as e:
        logger.error(f"Error saving run rows to Supabase: {e}")
        return False
