"""
Serviços do dgalab: uma classe por módulo e uma instância global.
"""

from app.services.domain_service import domain_service
from app.services.charbot_service import charbot_service
from app.services.feature_service import feature_service
from app.services.forest_service import forest_service
from app.services.evaluation_service import evaluation_service
from app.services.defense_service import defense_service
from app.services.analysis_service import analysis_service
