"""Run history storage"""

import json
import logging
from datetime import datetime
from typing import List, Optional

from sqlalchemy import Boolean, Column, DateTime, Float, ForeignKey, Integer, String, Text, create_engine
from sqlalchemy.orm import declarative_base, relationship, sessionmaker

logger = logging.getLogger(__name__)

Base = declarative_base()


class Run(Base):
    """One CLI run and its full JSON report"""
    __tablename__ = 'runs'

    id = Column(Integer, primary_key=True)
    command = Column(String(32), nullable=False)
    seed = Column(Integer)
    passed = Column(Boolean, default=False)
    schema_version = Column(Integer, default=1)
    report_json = Column(Text)
    created_at = Column(DateTime, default=datetime.utcnow)

    checks = relationship("CheckResult", back_populates="run", cascade="all, delete-orphan")

    def __repr__(self):
        return f"<Run(id={self.id}, command={self.command}, passed={self.passed})>"

    @property
    def failed_checks(self):
        return [check for check in self.checks if not check.passed]


class CheckResult(Base):
    """One record of a stored run"""
    __tablename__ = 'check_results'

    id = Column(Integer, primary_key=True)
    run_id = Column(Integer, ForeignKey('runs.id'), nullable=False)
    name = Column(String(64), nullable=False)
    paper_anchor = Column(String(128))
    passed = Column(Boolean, default=False)
    tolerance = Column(Float)
    values_json = Column(Text)

    run = relationship("Run", back_populates="checks")

    def __repr__(self):
        return f"<CheckResult(name={self.name}, passed={self.passed})>"

    @property
    def values(self) -> dict:
        return json.loads(self.values_json or '{}')


class DatabaseManager:
    """Database management class"""

    def __init__(self, database_url: str):
        self.engine = create_engine(database_url)
        self.SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=self.engine)

    def create_tables(self):
        """Create all database tables"""
        Base.metadata.create_all(bind=self.engine)

    def get_session(self):
        """Get database session"""
        return self.SessionLocal()

    def close(self):
        """Close database connection"""
        self.engine.dispose()


class RunHistory:
    """Stores reports and reads them back"""

    def __init__(self, db_manager: DatabaseManager):
        self.db_manager = db_manager
        self.db_manager.create_tables()

    def record(self, report, seed: Optional[int] = None) -> int:
        """Store a Report; returns the run id"""
        payload = report.to_dict()
        session = self.db_manager.get_session()
        try:
            run = Run(
                command=report.command,
                seed=seed,
                passed=report.passed,
                schema_version=payload['schemaVersion'],
                report_json=json.dumps(payload, sort_keys=True),
            )
            for record in payload['records']:
                run.checks.append(CheckResult(
                    name=record['name'],
                    paper_anchor=record['paperAnchor'],
                    passed=record['pass'],
                    tolerance=record['tolerance'],
                    values_json=json.dumps(record['values'], sort_keys=True),
                ))
            session.add(run)
            session.commit()
            logger.info(f"💾 Stored run {run.id} ({report.command})")
            return run.id
        except Exception as e:
            session.rollback()
            logger.error(f"Error storing run: {e}")
            raise
        finally:
            session.close()

    def latest(self, command: Optional[str] = None) -> Optional[dict]:
        """Most recent stored report (optionally for one command) as a dict"""
        session = self.db_manager.get_session()
        try:
            query = session.query(Run)
            if command is not None:
                query = query.filter(Run.command == command)
            run = query.order_by(Run.id.desc()).first()
            return None if run is None else json.loads(run.report_json)
        finally:
            session.close()

    def failed_checks(self, run_id: int) -> List[str]:
        session = self.db_manager.get_session()
        try:
            run = session.get(Run, run_id)
            return [] if run is None else [check.name for check in run.failed_checks]
        finally:
            session.close()
